//! Log lines go to stderr and, once a run directory exists, to its log file.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::sync::{Mutex, OnceLock};

static FILE: OnceLock<Mutex<Option<File>>> = OnceLock::new();

fn slot() -> &'static Mutex<Option<File>> {
    FILE.get_or_init(|| Mutex::new(None))
}

struct Tee;

impl Write for Tee {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if let Some(f) = slot().lock().expect("log lock").as_mut() {
            f.write_all(buf)?;
        }
        io::stderr().write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        if let Some(f) = slot().lock().expect("log lock").as_mut() {
            f.flush()?;
        }
        io::stderr().flush()
    }
}

pub fn init(verbose: bool) {
    let default = if verbose { "debug" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .target(env_logger::Target::Pipe(Box::new(Tee)))
        .format_timestamp_millis()
        .try_init();
}

/// Starts copying log lines into `path` (truncating it).
pub fn attach_file(path: &Path) -> io::Result<()> {
    let f = File::create(path)?;
    *slot().lock().expect("log lock") = Some(f);
    Ok(())
}
