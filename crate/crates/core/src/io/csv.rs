//! CSV emission for sweep tables.
//!
//! Layout: a block of `#`-prefixed metadata lines, one header row, then one
//! data row per sweep point in table order. Floats use scientific notation
//! with 9 significant digits so repeated runs diff cleanly.

use std::io::{self, Write};

use crate::sweep::{SweepParameter, SweepTable};
use crate::VERSION;

const RESULT_COLUMNS: [&str; 15] = [
    "fermi_level_used_ev",
    "patch_width_used_um",
    "sigma_re_s",
    "sigma_im_s",
    "surface_admittance_re_s",
    "surface_admittance_im_s",
    "input_admittance_re_s",
    "input_admittance_im_s",
    "gamma_re",
    "gamma_im",
    "ra",
    "phase_circuit_rad",
    "phase_spp_rad",
    "spp_order",
    "passivity_warning",
];

/// Column names of the data rows for `table`.
pub fn columns(table: &SweepTable) -> Vec<String> {
    let mut cols: Vec<String> = table.axes.iter().map(|a| a.parameter.column()).collect();
    cols.extend(RESULT_COLUMNS.iter().map(|s| s.to_string()));
    cols.push("error".to_string());
    cols
}

/// 9 significant digits, scientific notation.
pub fn format_number(x: f64) -> String {
    format!("{x:.8e}")
}

struct Counting<'a, W: Write> {
    inner: &'a mut W,
    bytes: usize,
}

impl<W: Write> Write for Counting<'_, W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.bytes += n;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Write `table` as CSV. `extra_metadata` lines (without the leading `#`) are
/// appended to the metadata block. Returns the number of bytes written.
pub fn emit_table<W: Write>(
    table: &SweepTable,
    extra_metadata: &[String],
    out: &mut W,
) -> io::Result<usize> {
    let mut w = Counting {
        inner: out,
        bytes: 0,
    };
    writeln!(w, "# girs sweep table")?;
    writeln!(w, "# tool_version: {VERSION}")?;
    writeln!(w, "# preset: {}", table.label.as_deref().unwrap_or("none"))?;
    writeln!(
        w,
        "# model_variant: {}",
        table.baseline.options.admittance_form.name()
    )?;
    for axis in &table.axes {
        writeln!(
            w,
            "# axis: {} ({} values)",
            axis.parameter.column(),
            axis.values.len()
        )?;
    }
    for note in &table.notes {
        writeln!(w, "# note: {note}")?;
    }
    for line in extra_metadata {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{}", columns(table).join(","))?;

    let mut line = String::new();
    for row in &table.rows {
        line.clear();
        for v in &row.coordinates {
            line.push_str(&format_number(*v));
            line.push(',');
        }
        match &row.outcome {
            Ok(p) => {
                let r = &p.reflection;
                let c = &table.baseline.options.constants;
                let sigma = r.conductivity.value();
                let nums = [
                    c.joule_to_ev(p.fermi_level),
                    p.patch_width / crate::constants::units::UM,
                    sigma.re,
                    sigma.im,
                    r.surface_admittance.re,
                    r.surface_admittance.im,
                    r.input_admittance.re,
                    r.input_admittance.im,
                    r.gamma.re,
                    r.gamma.im,
                    r.reflection_amplitude,
                    r.phase_circuit,
                    r.phase_spp,
                ];
                for v in nums {
                    line.push_str(&format_number(v));
                    line.push(',');
                }
                line.push_str(&r.spp_order.to_string());
                line.push(',');
                line.push_str(if r.passivity_warning { "true" } else { "false" });
                line.push(',');
            }
            Err(e) => {
                for _ in RESULT_COLUMNS {
                    line.push_str("NA,");
                }
                line.push_str(e.code());
            }
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(w.bytes)
}

/// Whether a column holds a swept coordinate rather than a result.
pub fn is_coordinate_column(name: &str) -> bool {
    SweepParameter::ALL.iter().any(|p| p.column() == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{run_sweep, Execution, Scenario, SweepAxis};

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(1.0), "1.00000000e0");
        assert_eq!(format_number(-0.000123456789123), "-1.23456789e-4");
    }

    #[test]
    fn single_point_table() {
        let table = run_sweep(&[], &Scenario::default(), Execution::Serial).unwrap();
        let mut buf = Vec::new();
        let n = emit_table(&table, &[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(n, text.len());
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0].split(',').count(), data[1].split(',').count());
        assert!(data[1].ends_with(','));
    }

    #[test]
    fn errored_rows_carry_na_and_code() {
        let mut base = Scenario::default();
        base.geometry.substrate_index = 2.0;
        let axes = [SweepAxis::new(SweepParameter::Frequency, vec![1.0])];
        let table = run_sweep(&axes, &base, Execution::Serial).unwrap();
        let mut buf = Vec::new();
        emit_table(&table, &["extra: yes".to_string()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# extra: yes"));
        let last = text.lines().last().unwrap();
        assert!(last.ends_with(",NA,slab_resonance"));
        assert!(is_coordinate_column("frequency_thz"));
        assert!(!is_coordinate_column("ra"));
    }
}
