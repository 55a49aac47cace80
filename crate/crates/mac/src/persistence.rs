use crate::config::{NodeConfig, PersistenceMode};

/// Raw persistence before overrides. Eager mode uses the smallest received
/// offer and ignores the demand; without any offer it falls back to the claim.
/// `weight` scales per-fragment values back to the whole demand.
pub fn compute_persistence(
    claim: f64,
    min_offer: Option<f64>,
    weight: u32,
    mode: PersistenceMode,
) -> f64 {
    let per_fragment = match mode {
        PersistenceMode::Lazy => claim,
        PersistenceMode::Eager => min_offer.unwrap_or(claim),
    };
    (per_fragment * f64::from(weight)).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverrideContext {
    pub isolated: bool,
    /// A neighbour was heard for the first time within `discovery_frames`,
    /// or a MAC receiver has yet to acknowledge any of our data.
    pub discovering: bool,
    /// Total claimed at the node's own auction.
    pub sum_adjacent_claims: f64,
    pub capacity: f64,
    /// Tolerance on the overload test; quantized claims can overshoot the
    /// capacity by half a grid step each.
    pub slack: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Overridden {
    pub p: f64,
    /// Send header-only packets in scheduled slots when the queue is empty.
    pub dummy: bool,
}

pub fn apply_overrides(p: f64, ctx: &OverrideContext, config: &NodeConfig) -> Overridden {
    let mut p = p;
    if ctx.isolated || ctx.discovering {
        p = p.min(config.p_default);
    }
    let dummy = ctx.sum_adjacent_claims > ctx.capacity + ctx.slack;
    if dummy {
        p = p.max(config.p_min);
    }
    Overridden { p, dummy }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calm() -> OverrideContext {
        OverrideContext {
            isolated: false,
            discovering: false,
            sum_adjacent_claims: 0.5,
            capacity: 1.0,
            slack: 0.0,
        }
    }

    #[test]
    fn raw_persistence() {
        assert_eq!(
            compute_persistence(0.25, Some(0.4), 1, PersistenceMode::Lazy),
            0.25
        );
        assert_eq!(
            compute_persistence(0.1, Some(0.4), 1, PersistenceMode::Eager),
            0.4
        );
        assert_eq!(
            compute_persistence(0.1, None, 1, PersistenceMode::Eager),
            0.1
        );
        assert!((compute_persistence(0.1, None, 3, PersistenceMode::Lazy) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn override_examples() {
        let cfg = NodeConfig::default();
        let isolated = OverrideContext {
            isolated: true,
            ..calm()
        };
        assert_eq!(
            apply_overrides(0.9, &isolated, &cfg),
            Overridden {
                p: 0.05,
                dummy: false
            }
        );
        let overloaded = OverrideContext {
            sum_adjacent_claims: 1.2,
            ..calm()
        };
        assert_eq!(
            apply_overrides(0.0, &overloaded, &cfg),
            Overridden {
                p: 0.01,
                dummy: true
            }
        );
        assert_eq!(
            apply_overrides(0.3, &calm(), &cfg),
            Overridden {
                p: 0.3,
                dummy: false
            }
        );
        let discovering = OverrideContext {
            discovering: true,
            ..calm()
        };
        assert_eq!(apply_overrides(0.3, &discovering, &cfg).p, 0.05);
    }
}
