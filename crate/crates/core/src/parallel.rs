use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

/// Maps `f` over `items` on up to `parallelism` scoped threads. Results come
/// back in input order regardless of completion order. Once any call returns
/// an error, workers stop picking up new items; the error reported is the
/// one with the lowest input index.
pub(crate) fn try_map_ordered<T, R, E, F>(items: &[T], parallelism: usize, f: F) -> Result<Vec<R>, (usize, E)>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync,
{
    let workers = parallelism.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().enumerate().map(|(i, item)| f(item).map_err(|e| (i, e))).collect();
    }

    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<Result<R, E>>>> = Mutex::new((0..items.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failed.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let result = f(&items[i]);
                if result.is_err() {
                    failed.store(true, Ordering::Relaxed);
                }
                slots.lock().expect("result slots poisoned")[i] = Some(result);
            });
        }
    });

    let slots = slots.into_inner().expect("result slots poisoned");
    let mut out = Vec::with_capacity(items.len());
    for (i, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(Ok(r)) => out.push(r),
            Some(Err(e)) => return Err((i, e)),
            // indices are claimed in order, so unclaimed slots only follow a failure
            None => unreachable!("slot {i} skipped without an earlier error"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order_under_parallelism() {
        let items: Vec<u32> = (0..200).collect();
        for p in [1, 2, 8] {
            let out: Result<Vec<u32>, (usize, ())> = try_map_ordered(&items, p, |x| Ok(x * 2));
            assert_eq!(out.unwrap(), items.iter().map(|x| x * 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn reports_an_error() {
        let items: Vec<u32> = (0..50).collect();
        let out = try_map_ordered(&items, 4, |&x| if x == 17 { Err("boom") } else { Ok(x) });
        let (i, e) = out.unwrap_err();
        assert_eq!(e, "boom");
        assert_eq!(i, 17);
    }
}
