//! Fixed-size worker pool over a slice, with results in input order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Maps `f` over `items` on `jobs` threads. The output order matches the
/// input regardless of which worker finishes first.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().enumerate().map(|(k, x)| f(k, x)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(k, &items[k]);
                slots.lock().expect("worker panicked")[k] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..50).collect();
        let serial = parallel_map(&xs, 1, |_, x| x * x);
        let parallel = parallel_map(&xs, 4, |_, x| {
            std::thread::sleep(std::time::Duration::from_micros(50 - x));
            x * x
        });
        assert_eq!(serial, parallel);
    }

    #[test]
    fn empty_input() {
        let xs: Vec<u8> = vec![];
        assert!(parallel_map(&xs, 8, |_, x| *x).is_empty());
    }
}
