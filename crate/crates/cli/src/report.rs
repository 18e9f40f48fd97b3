//! Benchmark report assembly and formatting.

use std::fmt::Write as _;

/// Throughput figures for one benchmark run.
///
/// `physics_sps` is environment-steps per wall-clock second and
/// `render_fps` is rendered images per wall-clock second; both are the
/// plain quotient `num_envs * steps / wall_time_s` of the fields stored
/// here, so the identity can be re-checked exactly from the report alone.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// Subcommand that produced the report.
    pub label: String,
    pub num_envs: usize,
    /// Steps for physics runs, frames for render runs.
    pub steps: usize,
    pub wall_time_s: f64,
    pub physics_sps: Option<f64>,
    pub render_fps: Option<f64>,
    /// Rough working-set estimate: state, scratch and image buffers.
    pub peak_memory_bytes: u64,
    pub seed: u64,
    /// Free-text description of the machine the numbers came from.
    pub machine: String,
}

/// Throughputs reported for large GPU-resident batches; printed for scale,
/// never asserted, and not reachable on a desktop CPU.
pub const REFERENCE_SPS: &str =
    "reference (non-binding): GPU-resident batched simulators report 4.43e6 SPS at 65536 envs";
pub const REFERENCE_FPS: &str =
    "reference (non-binding): GPU-resident batched renderers report 37597 FPS at 2048 envs, 8x8 depth";

impl BenchReport {
    pub fn new(
        label: &str,
        num_envs: usize,
        steps: usize,
        wall_time_s: f64,
        peak_memory_bytes: u64,
        seed: u64,
    ) -> Self {
        Self {
            label: label.to_string(),
            num_envs,
            steps,
            wall_time_s,
            physics_sps: None,
            render_fps: None,
            peak_memory_bytes,
            seed,
            machine: machine_note(),
        }
    }

    /// Environment-steps per second from this report's own fields.
    pub fn throughput(&self) -> f64 {
        (self.num_envs * self.steps) as f64 / self.wall_time_s
    }

    /// The report text block, one `key: value` line per field plus the
    /// non-binding reference footer for each throughput kind present.
    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "benchmark: {}", self.label);
        let _ = writeln!(s, "num_envs: {}", self.num_envs);
        let _ = writeln!(s, "steps: {}", self.steps);
        let _ = writeln!(s, "wall_time_s: {:?}", self.wall_time_s);
        if let Some(sps) = self.physics_sps {
            let _ = writeln!(s, "physics_sps: {:?}", sps);
        }
        if let Some(fps) = self.render_fps {
            let _ = writeln!(s, "render_fps: {:?}", fps);
        }
        let _ = writeln!(s, "peak_memory_bytes: {}", self.peak_memory_bytes);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "machine: {}", self.machine);
        if self.physics_sps.is_some() {
            let _ = writeln!(s, "{REFERENCE_SPS}");
        }
        if self.render_fps.is_some() {
            let _ = writeln!(s, "{REFERENCE_FPS}");
        }
        s
    }
}

/// OS, architecture and hardware thread count of the current machine.
pub fn machine_note() -> String {
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!(
        "{} {}, {} hardware threads",
        std::env::consts::OS,
        std::env::consts::ARCH,
        threads
    )
}
