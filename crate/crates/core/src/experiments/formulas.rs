//! Link and latency formulas evaluated against the reference hardware
//! values.

use crate::network::{classical_latency_ns, formula_p_succ, LinkParams, Topology, ETA_ION_HIGH};

#[derive(Clone, Debug, PartialEq)]
pub struct FormulaLine {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Relative tolerance.
    pub tolerance: f64,
    pub unit: &'static str,
}

impl FormulaLine {
    fn new(name: impl Into<String>, value: f64, reference: f64, tolerance: f64, unit: &'static str) -> Self {
        Self { name: name.into(), value, reference, tolerance, unit }
    }

    pub fn ok(&self) -> bool {
        if self.reference == 0.0 {
            return self.value.abs() <= self.tolerance;
        }
        ((self.value - self.reference) / self.reference).abs() <= self.tolerance
    }
}

/// Every formula evaluation with the value it should reproduce.
pub fn formula_report() -> Vec<FormulaLine> {
    let raw = LinkParams::default();
    let lab = LinkParams::lab();
    let mut out = vec![
        FormulaLine::new("p_succ formula, eta_ion=0.5, d=0", formula_p_succ(&raw), 0.0099225, 1e-12, ""),
        FormulaLine::new(
            "p_succ formula, eta_ion=0.87, d=0",
            formula_p_succ(&LinkParams { eta_ion: ETA_ION_HIGH, ..raw }),
            0.030_041_361,
            1e-9,
            "",
        ),
        FormulaLine::new("lab p_succ", lab.p_succ().unwrap_or(f64::NAN), 0.013, 0.01, ""),
        FormulaLine::new("lab t_cycle", lab.t_cycle_ns() as f64 / 1e3, 200.0, 0.01, "us"),
        FormulaLine::new("lab expected EPR time", lab.expected_epr_ns().unwrap_or(f64::NAN) / 1e6, 15.26, 0.01, "ms"),
    ];
    let fixed = LinkParams { t_class: crate::network::ClassicalPart::Fixed(100_000), ..lab };
    out.push(FormulaLine::new("t_cycle, t_class=100us", fixed.t_cycle_ns() as f64 / 1e3, 300.0, 0.0, "us"));
    out.push(FormulaLine::new("CCL lab", classical_latency_ns(0.0, 0) as f64 / 1e3, 155.0, 0.0, "us"));
    let refs = [("Rotterdam 1", 483.0), ("Leiden 1", 308.0)];
    let topo = Topology::surfnet();
    for (client, want) in refs {
        if let Ok(e) = topo.lookup("Delft 1", client) {
            out.push(FormulaLine::new(
                format!("CCL Delft 1 - {client}"),
                classical_latency_ns(e.distance_km, e.hops) as f64 / 1e3,
                want,
                0.0,
                "us",
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_reference_values_reproduced() {
        let r = formula_report();
        assert_eq!(r.len(), 9);
        for l in &r {
            assert!(l.ok(), "{l:?}");
        }
    }
}
