//! Machine-readable outputs. Numbers use Rust's shortest round-trip
//! formatting, which is locale independent and deterministic.

use std::io::{self, Write};

use crate::orbital::{Constellation, ContactWindow};
use crate::sim::{Comparison, MetricsRecord};

pub const METRICS_HEADER: &str = "sim_time_s,epoch,test_accuracy,test_loss,ps_down_msgs,ps_down_bits,ps_up_msgs,ps_up_bits,isl_msgs,isl_bits,fallback_hops,epoch_duration_s";

pub const CONTACTS_HEADER: &str = "satellite,plane,start_s,end_s,duration_s";

pub const SUMMARY_HEADER: &str = "speedup,traffic_ratio";

/// Header plus one row per record.
pub fn write_metrics(w: &mut dyn Write, records: &[MetricsRecord]) -> io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sim_time_s,
            r.epoch,
            r.test_accuracy,
            r.test_loss,
            r.ps_down_msgs,
            r.ps_down_bits,
            r.ps_up_msgs,
            r.ps_up_bits,
            r.isl_msgs,
            r.isl_bits,
            r.fallback_hops,
            r.epoch_duration_s
        )?;
    }
    Ok(())
}

/// `# seed=<n>` comment followed by [`write_metrics`].
pub fn write_metrics_with_seed(w: &mut dyn Write, seed: u64, records: &[MetricsRecord]) -> io::Result<()> {
    writeln!(w, "# seed={seed}")?;
    write_metrics(w, records)
}

/// Writes the metrics table to `path`.
pub fn emit_csv(records: &[MetricsRecord], path: &std::path::Path) -> io::Result<()> {
    let mut buf = Vec::new();
    write_metrics(&mut buf, records)?;
    std::fs::write(path, buf)
}

pub fn write_contacts(w: &mut dyn Write, constellation: &Constellation, windows: &[ContactWindow]) -> io::Result<()> {
    writeln!(w, "{CONTACTS_HEADER}")?;
    for c in windows {
        let plane = constellation.plane_of(c.node_a).map_or(String::new(), |p| (p + 1).to_string());
        writeln!(w, "{},{},{},{},{}", c.node_a.0, plane, c.start_s, c.end_s, c.end_s - c.start_s)?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// `speedup,traffic_ratio` header and one row; unavailable values are left empty.
pub fn write_summary(w: &mut dyn Write, c: &Comparison) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    writeln!(w, "{},{}", opt(c.speedup), opt(c.traffic_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> MetricsRecord {
        MetricsRecord {
            sim_time_s: 1234.5,
            epoch: 1,
            test_accuracy: 0.8125,
            test_loss: 0.5,
            ps_down_msgs: 5,
            ps_down_bits: 1_257_280,
            ps_up_msgs: 5,
            ps_up_bits: 1_257_280,
            isl_msgs: 75,
            isl_bits: 18_859_200,
            fallback_hops: 0,
            epoch_duration_s: 1234.5,
        }
    }

    #[test]
    fn single_record_is_two_lines() {
        let mut out = Vec::new();
        write_metrics(&mut out, &[record()]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            format!("{METRICS_HEADER}\n1234.5,1,0.8125,0.5,5,1257280,5,1257280,75,18859200,0,1234.5\n")
        );
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn seed_comment_leads() {
        let mut out = Vec::new();
        write_metrics_with_seed(&mut out, 42, &[]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("# seed=42\n{METRICS_HEADER}\n"));
    }
}
