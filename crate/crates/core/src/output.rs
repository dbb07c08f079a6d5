//! Byte-stable CSV and report emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{Section4Report, ThresholdReport};
use crate::integrator::{RunOutput, TrajectoryRow};
use crate::metrics::DiagnosticsRow;

pub const DIAGNOSTICS_HEADER: [&str; 13] = [
    "t",
    "X",
    "V",
    "d_X",
    "d_V",
    "mu",
    "psi_star",
    "R_tau",
    "sigma_tau",
    "lyap_L2",
    "lyap_Linf",
    "bound_V",
    "bound_dV",
];

/// Formats `x` with 17 significant digits, which round-trips every double.
///
/// Positional notation is used for decimal exponents in `[-5, 17)`, scientific otherwise;
/// trailing zeros are dropped. The output never depends on the locale.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    if (-5..17).contains(&exp) {
        let mut out = String::from(sign);
        if exp < 0 {
            out.push_str("0.");
            out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
            out.push_str(digits);
        } else {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                out.push_str(digits);
                out.extend(std::iter::repeat_n('0', int_len - digits.len()));
            } else {
                out.push_str(&digits[..int_len]);
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        }
        out
    } else {
        let (head, tail) = digits.split_at(1);
        if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        }
    }
}

fn push_record(out: &mut String, fields: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for x in fields {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&format_f64(x));
    }
    out.push('\n');
}

/// Trajectory CSV text: `t`, then `x_i_k` and `v_i_k` with 1-based indices.
pub fn trajectory_csv(n: usize, d: usize, rows: &[TrajectoryRow]) -> String {
    let mut out = String::from("t");
    for i in 1..=n {
        for k in 1..=d {
            let _ = write!(out, ",x_{i}_{k}");
        }
        for k in 1..=d {
            let _ = write!(out, ",v_{i}_{k}");
        }
    }
    out.push('\n');
    for r in rows {
        let mut fields = vec![r.t];
        for i in 0..n {
            fields.extend_from_slice(r.x.row(i));
            fields.extend_from_slice(r.v.row(i));
        }
        push_record(&mut out, fields);
    }
    out
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = DIAGNOSTICS_HEADER.join(",");
    out.push('\n');
    for r in rows {
        push_record(
            &mut out,
            [
                r.t,
                r.x_var,
                r.v_var,
                r.d_x,
                r.d_v,
                r.mu,
                r.psi_star,
                r.r_tau,
                r.sigma_tau,
                r.lyap_l2,
                r.lyap_linf,
                r.bound_v,
                r.bound_dv,
            ],
        );
    }
    out
}

pub fn threshold_csv(report: &ThresholdReport) -> String {
    let mut out = String::from("tau,horizon,classification,counted\n");
    for p in &report.probes {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_f64(p.tau),
            format_f64(p.horizon),
            p.raw,
            p.counted
        );
    }
    out
}

pub fn write_file(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `<dir>/<name>/trajectory.csv` and `<dir>/<name>/diagnostics.csv`.
pub fn write_run(dir: impl AsRef<Path>, name: &str, n: usize, d: usize, run: &RunOutput) -> Result<()> {
    let base = dir.as_ref().join(name);
    write_file(base.join("trajectory.csv"), &trajectory_csv(n, d, &run.trajectory))?;
    write_file(base.join("diagnostics.csv"), &diagnostics_csv(&run.diagnostics))
}

/// Writes the three-agent bundle: per-run directories, a flat `<name>.csv` trajectory per run,
/// and `summary.txt`.
pub fn write_section4(dir: impl AsRef<Path>, report: &Section4Report) -> Result<()> {
    let dir = dir.as_ref();
    for r in &report.runs {
        write_run(dir, &r.name, 3, 2, &r.output)?;
        write_file(
            dir.join(format!("{}.csv", r.name)),
            &trajectory_csv(3, 2, &r.output.trajectory),
        )?;
    }
    write_file(dir.join("summary.txt"), &report.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [
            1.0 / 9.0,
            0.1,
            1e-7,
            123456.789,
            -2.5e20,
            f64::MIN_POSITIVE,
            f64::MAX,
            1e16,
            1e17,
            3.0,
        ] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_f64(1.0 / 9.0), "0.1111111111111111");
        assert_eq!(format_f64(3.0), "3");
        assert_eq!(format_f64(-0.5), "-0.5");
        assert_eq!(format_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_f64(1500.0), "1500");
        assert_eq!(format_f64(0.0), "0");
        assert_eq!(format_f64(f64::NAN), "NaN");
    }

    #[test]
    fn empty_run_is_header_only() {
        assert_eq!(diagnostics_csv(&[]), format!("{}\n", DIAGNOSTICS_HEADER.join(",")));
        assert_eq!(trajectory_csv(2, 1, &[]), "t,x_1_1,v_1_1,x_2_1,v_2_1\n");
    }
}
