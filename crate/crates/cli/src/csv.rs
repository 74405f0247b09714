//! CSV export of pulses and dynamics.
//!
//! Values are written in Rust's shortest round-trip notation, so reading a
//! pulse file back reproduces the exported controls exactly.

use std::path::Path;

use krotov_core::{ControlField, QuantumState};

pub fn write_pulses(path: &Path, midpoints: &[f64], controls: &[ControlField]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..controls.len()).map(|l| format!("eps_{l}")));
    w.write_record(&header)?;
    for (n, t) in midpoints.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(controls.iter().map(|c| c.values()[n].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Times and one column per control.
pub fn read_pulses(path: &Path) -> anyhow::Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let n_cols = r.headers()?.len();
    anyhow::ensure!(n_cols >= 2, "{}: expected a time column and at least one control column", path.display());
    let mut times = vec![];
    let mut columns = vec![vec![]; n_cols - 1];
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let mut values = record.iter().map(|s| s.trim().parse::<f64>());
        let line = i + 2;
        times.push(values.next().expect("non-empty record").map_err(|e| anyhow::anyhow!("line {line}: {e}"))?);
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(v.map_err(|e| anyhow::anyhow!("line {line}: {e}"))?);
        }
    }
    Ok((times, columns))
}

/// Populations of every objective at every grid point, columns `pop_k_i`.
pub fn write_dynamics(path: &Path, times: &[f64], trajectories: &[Vec<QuantumState>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    for (k, traj) in trajectories.iter().enumerate() {
        let d = traj.first().map(|s| s.space().hilbert_dim()).unwrap_or(0);
        header.extend((0..d).map(|i| format!("pop_{k}_{i}")));
    }
    w.write_record(&header)?;
    for (n, t) in times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        for traj in trajectories {
            row.extend(traj[n].populations().iter().map(f64::to_string));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let controls = vec![
            ControlField::new(vec![0.1, 1.0 / 3.0, -2.5e-17]).unwrap(),
            ControlField::new(vec![std::f64::consts::PI, 0.0, 1e300]).unwrap(),
        ];
        write_pulses(&path, &[0.5, 1.5, 2.5], &controls).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,eps_0,eps_1\n0.5,0.1,3.141592653589793\n"));
        let (times, cols) = read_pulses(&path).unwrap();
        assert_eq!(times, vec![0.5, 1.5, 2.5]);
        assert_eq!(cols[0], controls[0].values());
        assert_eq!(cols[1], controls[1].values());
    }

    #[test]
    fn dynamics_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let s0 = QuantumState::basis(2, 0).unwrap();
        let s1 = QuantumState::basis(2, 1).unwrap();
        write_dynamics(&path, &[0.0, 1.0], &[vec![s0.clone(), s1.clone()], vec![s1, s0]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,pop_0_0,pop_0_1,pop_1_0,pop_1_1\n0,1,0,0,1\n1,0,1,1,0\n");
    }

    #[test]
    fn bad_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "t,eps_0\n0.5,1\n1.5,x\n").unwrap();
        let err = read_pulses(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
