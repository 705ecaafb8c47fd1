//! Worker pool sized by `GOMPERTZ_OPT_THREADS`.

use crate::error::{AppError, AppResult};

pub const THREADS_ENV: &str = "GOMPERTZ_OPT_THREADS";

/// Worker count from the environment; `None` leaves rayon's default.
pub fn requested_threads() -> AppResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(AppError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs `f` inside a pool honoring [`THREADS_ENV`].
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> AppResult<R> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = requested_threads()? {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| AppError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
