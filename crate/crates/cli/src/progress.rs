//! Periodic progress lines on stderr while an experiment runs. The status
//! stream never touches the data file, so data output and progress cannot
//! interleave.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use labouchere::Progress;

pub struct ProgressReporter {
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl ProgressReporter {
    /// Starts a reporter thread that prints `completed X/Y rounds in Z
    /// seconds` every `interval_secs`. An interval of 0 disables reporting.
    pub fn start(progress: Arc<Progress>, total_rounds: u64, interval_secs: u64) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let handle = (interval_secs > 0).then(|| {
            let stop = Arc::clone(&stop);
            let started = Instant::now();
            std::thread::spawn(move || {
                let interval = Duration::from_secs(interval_secs);
                loop {
                    std::thread::park_timeout(interval);
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    eprintln!(
                        "completed {}/{} rounds in {} seconds",
                        progress.completed(),
                        total_rounds,
                        started.elapsed().as_secs()
                    );
                }
            })
        });
        Self {
            stop,
            handle,
        }
    }

    pub fn finish(mut self) {
        self.stop_thread();
    }

    fn stop_thread(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(handle) = self.handle.take() {
            handle.thread().unpark();
            let _ = handle.join();
        }
    }
}

impl Drop for ProgressReporter {
    fn drop(&mut self) {
        self.stop_thread();
    }
}
