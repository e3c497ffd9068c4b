//! CSV export of trajectories.

use std::io::{self, Write};

use crate::propagator::Trajectory;

/// Header line: `step,t,norm,sx1,sy1,sz1,q1,...,sxL,syL,szL,qL,eo_index`.
pub fn csv_header(num_qubits: usize) -> String {
    let mut cols = vec!["step".to_string(), "t".to_string(), "norm".to_string()];
    for j in 1..=num_qubits {
        for name in ["sx", "sy", "sz", "q"] {
            cols.push(format!("{name}{j}"));
        }
    }
    cols.push("eo_index".to_string());
    cols.join(",")
}

/// One row per sample, reals with 12 significant digits.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    traj: &Trajectory,
    num_qubits: usize,
) -> io::Result<()> {
    writeln!(out, "{}", csv_header(num_qubits))?;
    for s in &traj.samples {
        let o = &s.obs;
        write!(out, "{},{:.11e},{:.11e}", s.step, o.t, o.norm)?;
        for j in 0..num_qubits {
            write!(
                out,
                ",{:.11e},{:.11e},{:.11e},{:.11e}",
                o.sx[j], o.sy[j], o.sz[j], o.q[j]
            )?;
        }
        writeln!(out, ",{}", s.eo_index)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PulseSequence;
    use crate::propagator::{Integrator, Sampling, StepOverride};
    use crate::state::StateVector;

    #[test]
    fn header_layout() {
        assert_eq!(
            csv_header(2),
            "step,t,norm,sx1,sy1,sz1,q1,sx2,sy2,sz2,q2,eo_index"
        );
    }

    #[test]
    fn empty_sequence_gives_one_row() {
        let mut s = StateVector::basis(2, &[0, 1]).unwrap();
        let traj = Integrator::new()
            .run_sequence(&mut s, &PulseSequence::default(), StepOverride::Auto, Sampling::default())
            .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj, 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            "0,0.00000000000e0,1.00000000000e0,0.00000000000e0,0.00000000000e0,5.00000000000e-1,0.00000000000e0,0.00000000000e0,0.00000000000e0,-5.00000000000e-1,1.00000000000e0,0"
        );
    }
}
