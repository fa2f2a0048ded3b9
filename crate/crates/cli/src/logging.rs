//! Minimal stderr logger with a plain and a JSON-lines mode.

use log::{Level, LevelFilter, Log, Metadata, Record};

struct StderrLogger {
    json: bool,
}

impl Log for StderrLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = if self.json {
            serde_json::json!({
                "level": record.level().as_str().to_ascii_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            })
            .to_string()
        } else if record.level() == Level::Info {
            record.args().to_string()
        } else {
            format!("{}: {}", record.level().as_str().to_ascii_lowercase(), record.args())
        };
        eprintln!("{line}");
    }

    fn flush(&self) {}
}

pub fn init(quiet: bool, json: bool) {
    let level = if quiet { LevelFilter::Error } else { LevelFilter::Info };
    static PLAIN: StderrLogger = StderrLogger { json: false };
    static JSON: StderrLogger = StderrLogger { json: true };
    if log::set_logger(if json { &JSON } else { &PLAIN }).is_ok() {
        log::set_max_level(level);
    }
}
