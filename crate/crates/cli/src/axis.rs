use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Context};
use atlas_sim::{Mobility, Scenario};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    PDefault,
    TLostNbr,
    Speed,
    Width,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::PDefault => "p_default",
            Parameter::TLostNbr => "t_lost_nbr",
            Parameter::Speed => "speed",
            Parameter::Width => "width",
        }
    }

    /// Width keeps the base scenario's node density.
    pub fn apply(self, base: &Scenario, s: &mut Scenario, value: f64) {
        match self {
            Parameter::PDefault => s.node.p_default = value,
            Parameter::TLostNbr => s.node.t_lost_nbr = value,
            Parameter::Speed => {
                let warmup = match s.mobility {
                    Mobility::RandomWaypoint { warmup, .. } => warmup,
                    _ => 30.0,
                };
                s.mobility = Mobility::RandomWaypoint {
                    speed: value,
                    warmup,
                };
            }
            Parameter::Width => {
                s.width = value;
                s.nodes = ((base.nodes as f64) * value / base.width).round().max(1.0) as usize;
            }
        }
    }
}

impl FromStr for Parameter {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "p_default" => Parameter::PDefault,
            "t_lost_nbr" => Parameter::TLostNbr,
            "speed" => Parameter::Speed,
            "width" => Parameter::Width,
            _ => bail!("unknown axis {s:?}; expected p_default, t_lost_nbr, speed or width"),
        })
    }
}

/// `name=v1,v2,...`
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub parameter: Parameter,
    pub values: Vec<f64>,
}

impl FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (name, list) = s
            .split_once('=')
            .with_context(|| format!("axis {s:?} is not of the form name=v1,v2"))?;
        let parameter: Parameter = name.trim().parse()?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("axis {name}: {v:?} is not a number"))
            })
            .collect::<anyhow::Result<Vec<f64>>>()?;
        if values.is_empty() {
            bail!("axis {name} has no values");
        }
        Ok(Axis { parameter, values })
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(f64::to_string).collect();
        write!(f, "{}={}", self.parameter.name(), vals.join(","))
    }
}

/// Every combination of axis values, first axis outermost.
pub fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_axes() {
        let a: Axis = "p_default=0.01, 0.05".parse().unwrap();
        assert_eq!(a.parameter, Parameter::PDefault);
        assert_eq!(a.values, vec![0.01, 0.05]);
        assert_eq!(a.to_string(), "p_default=0.01,0.05");
        assert!("colour=1".parse::<Axis>().is_err());
        assert!("speed=fast".parse::<Axis>().is_err());
        assert!("speed".parse::<Axis>().is_err());
    }

    #[test]
    fn grid_is_the_cross_product_in_order() {
        let axes = [
            "speed=0,10".parse::<Axis>().unwrap(),
            "t_lost_nbr=0.5,2,5".parse::<Axis>().unwrap(),
        ];
        let g = grid(&axes);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![0.0, 0.5]);
        assert_eq!(g[2], vec![0.0, 5.0]);
        assert_eq!(g[3], vec![10.0, 0.5]);
        assert_eq!(grid(&[]), vec![Vec::<f64>::new()]);
    }

    #[test]
    fn width_keeps_density() {
        let base = Scenario::default();
        let mut s = base.clone();
        Parameter::Width.apply(&base, &mut s, 6000.0);
        assert_eq!((s.width, s.nodes), (6000.0, 200));
        Parameter::Speed.apply(&base, &mut s, 20.0);
        assert_eq!(
            s.mobility,
            Mobility::RandomWaypoint {
                speed: 20.0,
                warmup: 30.0
            }
        );
    }
}
