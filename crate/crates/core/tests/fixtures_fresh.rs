//! The bundled fixtures must equal what the generator produces today.

#[allow(dead_code)]
#[path = "../examples/gen_fixtures.rs"]
mod gen_fixtures;

use std::path::{Path, PathBuf};

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn bundled_fixtures_are_up_to_date() {
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let fresh = tempfile::tempdir().unwrap();
    gen_fixtures::generate(fresh.path());
    let names = files(fresh.path());
    assert_eq!(names, files(&bundled));
    for name in names {
        let a = std::fs::read(bundled.join(&name)).unwrap();
        let b = std::fs::read(fresh.path().join(&name)).unwrap();
        assert!(a == b, "{} is stale; rerun the gen_fixtures example", name.display());
    }
}
