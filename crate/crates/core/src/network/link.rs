use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::NetworkError;

/// How the classical part of an entanglement attempt is costed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "ns")]
pub enum ClassicalPart {
    /// Light travel from a node to the midpoint station, (d/2)/c_fiber.
    Propagation,
    /// Full classical latency formula evaluated at d/2 with zero hops.
    MidpointLatency,
    Fixed(u64),
}

/// Heralded entanglement link between two nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkParams {
    /// Fiber attenuation, dB/km.
    pub alpha: f64,
    pub eta_ion: f64,
    pub eta_fc: f64,
    pub eta_det: f64,
    pub eta_penalty: f64,
    pub t_prep_ns: u64,
    pub distance_km: f64,
    pub t_class: ClassicalPart,
    /// Overall factor applied to the formula value; used to pin the
    /// zero-distance probability to a measured value.
    pub p_scale: f64,
}

pub const ETA_ION_LOW: f64 = 0.5;
pub const ETA_ION_HIGH: f64 = 0.87;
/// Measured lab success probability the default link is pinned to.
pub const LAB_P_SUCC: f64 = 0.013;

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            eta_ion: ETA_ION_LOW,
            eta_fc: 0.7,
            eta_det: 0.9,
            eta_penalty: 0.2,
            t_prep_ns: 200_000,
            distance_km: 0.0,
            t_class: ClassicalPart::Propagation,
            p_scale: 1.0,
        }
    }
}

impl LinkParams {
    /// Lab link: zero distance, p_succ = 0.013, 200 µs attempts.
    pub fn lab() -> Self {
        Self::default().calibrated(LAB_P_SUCC)
    }

    /// Rescales so that the same link at zero distance succeeds with `p0`.
    pub fn calibrated(mut self, p0: f64) -> Self {
        let at_zero = LinkParams { distance_km: 0.0, p_scale: 1.0, ..self };
        self.p_scale = p0 / formula_p_succ(&at_zero);
        self
    }

    pub fn at_distance(mut self, km: f64) -> Self {
        self.distance_km = km;
        self
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let effs = [self.eta_ion, self.eta_fc, self.eta_det, self.eta_penalty];
        if effs.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return Err(NetworkError::Parameter("efficiencies must lie in (0, 1]".into()));
        }
        if !(self.alpha >= 0.0) || !(self.distance_km >= 0.0) || !(self.p_scale > 0.0) {
            return Err(NetworkError::Parameter("alpha, distance and p_scale must be non-negative".into()));
        }
        if self.t_prep_ns == 0 {
            return Err(NetworkError::Parameter("t_prep must be positive".into()));
        }
        Ok(())
    }

    /// Success probability of a single attempt.
    pub fn p_succ(&self) -> Result<f64, NetworkError> {
        self.validate()?;
        let p = self.p_scale * formula_p_succ(self);
        if p >= 1.0 {
            return Err(NetworkError::Parameter(format!("p_succ = {p} is not a probability")));
        }
        Ok(p)
    }

    pub fn t_class_ns(&self) -> u64 {
        let half = self.distance_km / 2.0;
        match self.t_class {
            ClassicalPart::Propagation => fiber_delay_ns(half),
            ClassicalPart::MidpointLatency => classical_latency_ns(half, 0),
            ClassicalPart::Fixed(ns) => ns,
        }
    }

    pub fn t_cycle_ns(&self) -> u64 {
        self.t_class_ns() + self.t_prep_ns
    }

    /// Mean time to a heralded pair, t_cycle / p_succ.
    pub fn expected_epr_ns(&self) -> Result<f64, NetworkError> {
        Ok(self.t_cycle_ns() as f64 / self.p_succ()?)
    }
}

/// ½ η_pen (η_ion η_fc η_det)² 10^(−(α/10)(d/2)), unscaled.
pub fn formula_p_succ(l: &LinkParams) -> f64 {
    let eta = l.eta_ion * l.eta_fc * l.eta_det;
    0.5 * l.eta_penalty * eta * eta * 10f64.powf(-(l.alpha / 10.0) * (l.distance_km / 2.0))
}

/// Fiber propagation delay at 200 000 km/s.
pub fn fiber_delay_ns(distance_km: f64) -> u64 {
    (distance_km * 5_000.0).round() as u64
}

/// h·244 µs + 155 µs + d/(200 000 km/s).
pub fn classical_latency_ns(distance_km: f64, hops: u32) -> u64 {
    hops as u64 * 244_000 + 155_000 + fiber_delay_ns(distance_km)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EprOutcome {
    Success { elapsed_ns: u64, attempts: u64 },
    BinExpired { elapsed_ns: u64, attempts: u64 },
}

impl EprOutcome {
    pub fn elapsed_ns(&self) -> u64 {
        match *self {
            EprOutcome::Success { elapsed_ns, .. } | EprOutcome::BinExpired { elapsed_ns, .. } => elapsed_ns,
        }
    }
}

/// Runs attempts of `t_cycle_ns` each until one succeeds or the next would
/// not fit in `remaining_ns`.
pub fn sample_epr<R: Rng + ?Sized>(p: f64, t_cycle_ns: u64, remaining_ns: u64, rng: &mut R) -> EprOutcome {
    let fit = remaining_ns / t_cycle_ns;
    if fit == 0 {
        return EprOutcome::BinExpired { elapsed_ns: 0, attempts: 0 };
    }
    let failures = Geometric::new(p).expect("valid probability").sample(rng);
    let attempts = failures.saturating_add(1);
    if attempts <= fit {
        EprOutcome::Success { elapsed_ns: attempts * t_cycle_ns, attempts }
    } else {
        EprOutcome::BinExpired { elapsed_ns: fit * t_cycle_ns, attempts: fit }
    }
}
