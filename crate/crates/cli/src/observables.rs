//! Named observables: `x0`, `y0`, `z0` (Pauli on a qubit site), `n1`, `a1`, `xhat1`,
//! `phat1` (resonator operators on a boson site) and `fidelity` (against the protocol's
//! reference evolution).

use daqsim_core::{
    boson_operator, expectation, qubit_operator, BosonOp, HilbertSpec, OperatorMatrix, QuantumState,
    QubitOp, SubsystemKind, C64,
};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug)]
pub enum Observable {
    Operator { name: String, matrix: OperatorMatrix },
    Fidelity,
}

impl Observable {
    pub fn parse(name: &str, space: &HilbertSpec) -> CliResult<Self> {
        if name == "fidelity" {
            return Ok(Observable::Fidelity);
        }
        let split = name
            .find(|c: char| c.is_ascii_digit())
            .ok_or_else(|| CliError::Config(format!("observable `{name}` has no site index")))?;
        let (op, site) = name.split_at(split);
        let site: usize = site
            .parse()
            .map_err(|_| CliError::Config(format!("observable `{name}` has a malformed site index")))?;
        let sub = space
            .subsystems()
            .get(site)
            .ok_or_else(|| CliError::Config(format!("observable `{name}`: site {site} does not exist")))?;
        let local = match (op, sub.kind) {
            ("x", SubsystemKind::Qubit) => qubit_operator(QubitOp::X),
            ("y", SubsystemKind::Qubit) => qubit_operator(QubitOp::Y),
            ("z", SubsystemKind::Qubit) => qubit_operator(QubitOp::Z),
            ("n", SubsystemKind::Boson) => boson_operator(BosonOp::Number, sub.dim)?,
            ("a", SubsystemKind::Boson) => boson_operator(BosonOp::Annihilation, sub.dim)?,
            ("xhat", SubsystemKind::Boson) => boson_operator(BosonOp::QuadX, sub.dim)?,
            ("phat", SubsystemKind::Boson) => boson_operator(BosonOp::QuadP, sub.dim)?,
            _ => {
                return Err(CliError::Config(format!(
                    "observable `{name}`: `{op}` is not defined on {} site {site}",
                    sub.kind.name()
                )))
            }
        };
        Ok(Observable::Operator {
            name: name.to_string(),
            matrix: OperatorMatrix::embed(space, &local, &[site])?,
        })
    }

    /// Expectation value, or the supplied fidelity for [`Observable::Fidelity`].
    pub fn value(&self, s: &QuantumState, fidelity: Option<f64>) -> CliResult<C64> {
        match self {
            Observable::Operator { matrix, .. } => Ok(expectation(s, matrix)?),
            Observable::Fidelity => Ok(C64::new(fidelity.unwrap_or(f64::NAN), 0.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use daqsim_core::Subsystem;

    #[test]
    fn parses_and_checks_kinds() {
        let space = HilbertSpec::new(vec![Subsystem::qubit(), Subsystem::boson(4)]).unwrap();
        assert!(Observable::parse("z0", &space).is_ok());
        assert!(Observable::parse("xhat1", &space).is_ok());
        assert!(Observable::parse("n0", &space).is_err());
        assert!(Observable::parse("z1", &space).is_err());
        assert!(Observable::parse("z7", &space).is_err());
        assert!(Observable::parse("q", &space).is_err());
        let s = QuantumState::basis(&space, &[1, 0]).unwrap();
        let z = Observable::parse("z0", &space).unwrap();
        assert_eq!(z.value(&s, None).unwrap(), C64::new(1.0, 0.0));
    }
}
