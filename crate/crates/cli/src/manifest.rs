//! Plain-text run manifest: the complete configuration, build information and
//! timings. Feeding a manifest back to `run --config` repeats the run with
//! identical CSV output.

use std::fmt::Write;
use std::time::Duration;

pub const CONFIG_BEGIN: &str = "----- BEGIN CONFIG -----";
pub const CONFIG_END: &str = "----- END CONFIG -----";

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub command: String,
    pub config_json: String,
    pub timings: Vec<(String, Duration)>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "fastreact run manifest");
        let _ = writeln!(s, "command: {}", self.command);
        let _ = writeln!(s, "fastreact version: {}", fastreact::VERSION);
        let _ = writeln!(s, "cli version: {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(
            s,
            "target: {}-{}, debug assertions: {}",
            std::env::consts::ARCH,
            std::env::consts::OS,
            cfg!(debug_assertions)
        );
        let _ = writeln!(s, "timings:");
        for (what, d) in &self.timings {
            let _ = writeln!(s, "  {what}: {:.3} s", d.as_secs_f64());
        }
        let _ = writeln!(s, "outputs:");
        for o in &self.outputs {
            let _ = writeln!(s, "  {o}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let _ = writeln!(s, "{CONFIG_BEGIN}");
        let _ = writeln!(s, "{}", self.config_json.trim_end());
        let _ = writeln!(s, "{CONFIG_END}");
        s
    }
}

/// The configuration block of a manifest, if `text` is one.
pub fn embedded_config(text: &str) -> Option<&str> {
    let start = text.find(CONFIG_BEGIN)? + CONFIG_BEGIN.len();
    let end = start + text[start..].find(CONFIG_END)?;
    Some(text[start..end].trim())
}
