//! Alternating Base/Control execution.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    HeteroticError, HeteroticSystem, Oracle, BASE, BASE_INPUT, CONTROL, FN_STEP, STATE_EXEC,
    STATE_IDLE, STATE_SEND,
};
use crate::csxms::{CsxmSystem, MoveKind, SystemConfiguration, SystemMove};
use crate::psystem::PConfiguration;
use crate::sxm::Symbol;
use crate::value::Value;

/// Ordinary steps Control may take between two exchanges.
const CONTROL_STEP_LIMIT: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    BaseToControl,
    ControlToBase,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub round: usize,
    pub direction: Direction,
    pub configuration: PConfiguration,
    /// Base steps to reach the configuration (Base to Control only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunEnd {
    ControlTerminated,
    RoundsExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeteroticTrace {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub rounds: usize,
    pub exchanges: Vec<Exchange>,
    pub control_outputs: Vec<Symbol>,
    pub ended: RunEnd,
}

impl HeteroticTrace {
    /// Exchanges alternate strictly, starting from the Base.
    pub fn alternates(&self) -> bool {
        self.exchanges.iter().enumerate().all(|(i, e)| {
            e.direction
                == if i % 2 == 0 {
                    Direction::BaseToControl
                } else {
                    Direction::ControlToBase
                }
        })
    }

    pub fn count(&self, direction: Direction) -> usize {
        self.exchanges
            .iter()
            .filter(|e| e.direction == direction)
            .count()
    }
}

impl fmt::Display for HeteroticTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.exchanges {
            let arrow = match e.direction {
                Direction::BaseToControl => "Base ⟹ Control",
                Direction::ControlToBase => "Control ⟹ Base",
            };
            write!(f, "round {}: {arrow} {}", e.round, e.configuration)?;
            if let Some(s) = e.steps {
                write!(f, " after {s} step{}", if s == 1 { "" } else { "s" })?;
            }
            writeln!(f)?;
        }
        let ended = match self.ended {
            RunEnd::ControlTerminated => "control terminated",
            RunEnd::RoundsExhausted => "rounds exhausted",
        };
        writeln!(f, "ended: {ended}")
    }
}

fn is_comm(m: &SystemMove) -> bool {
    matches!(m.kind, MoveKind::Communicating { .. })
}

/// The single ordinary move of `component` on `symbol`, if any.
fn ordinary(
    sys: &CsxmSystem,
    cfg: &SystemConfiguration,
    component: usize,
    symbol: &str,
) -> Result<Option<SystemMove>, HeteroticError> {
    let mut offered = cfg.clone();
    offered.components[component - 1].remaining_input = vec![symbol.to_string()];
    let mut moves: Vec<SystemMove> = sys
        .moves(&offered)
        .into_iter()
        .filter(|m| m.component == component && !is_comm(m))
        .collect();
    moves.dedup_by(|a, b| a.successor == b.successor);
    match moves.len() {
        0 => Ok(None),
        1 => Ok(moves.pop()),
        _ => Err(HeteroticError::Nondeterministic { component }),
    }
}

/// Fires the communicating move of `component` and returns the value sent.
fn communicate(
    sys: &CsxmSystem,
    cfg: &mut SystemConfiguration,
    component: usize,
    round: usize,
) -> Result<Value, HeteroticError> {
    let sent = cfg.components[component - 1].out_port.clone();
    let mut moves: Vec<SystemMove> = sys
        .moves(cfg)
        .into_iter()
        .filter(|m| m.component == component && is_comm(m))
        .collect();
    moves.dedup_by(|a, b| a.successor == b.successor);
    match moves.len() {
        0 => Err(HeteroticError::Deadlock {
            round,
            reason: format!("component {component} cannot deliver {sent}"),
        }),
        1 => {
            *cfg = moves.pop().unwrap().successor;
            Ok(sent)
        }
        _ => Err(HeteroticError::Nondeterministic { component }),
    }
}

fn crossing(h: &HeteroticSystem, v: &Value) -> Result<PConfiguration, HeteroticError> {
    let cfg = PConfiguration::from_value(v)
        .ok_or_else(|| HeteroticError::InvalidExchange(format!("{v} is not a configuration")))?;
    h.psystem
        .check_configuration(&cfg)
        .map_err(|e| HeteroticError::InvalidExchange(e.to_string()))?;
    Ok(cfg)
}

/// Runs the Base until it has a halted configuration on its out-port.
fn base_phase(
    h: &HeteroticSystem,
    cfg: &mut SystemConfiguration,
    round: usize,
    oracle: &mut Option<&mut dyn Oracle>,
) -> Result<Option<usize>, HeteroticError> {
    let sys = &h.as_system;
    if cfg.components[BASE - 1].state == STATE_IDLE {
        *cfg = ordinary(sys, cfg, BASE, BASE_INPUT)?
            .ok_or_else(|| HeteroticError::Deadlock {
                round,
                reason: "the Base has no configuration to start from".into(),
            })?
            .successor;
    }
    if let Some(oracle) = oracle {
        let start = crossing(h, &cfg.components[BASE - 1].memory)?;
        let answer = oracle.evaluate(&start)?;
        h.psystem
            .check_configuration(&answer.final_configuration)
            .map_err(|e| HeteroticError::OracleInvalidResult(e.to_string()))?;
        let base = &mut cfg.components[BASE - 1];
        base.memory = answer.final_configuration.to_value();
        base.out_port = base.memory.clone();
        base.state = STATE_SEND.to_string();
        return Ok(answer.steps);
    }
    let mut steps = 0;
    while cfg.components[BASE - 1].state == STATE_EXEC {
        let mv = ordinary(sys, cfg, BASE, BASE_INPUT)?.ok_or_else(|| HeteroticError::Deadlock {
            round,
            reason: "the Base has no move".into(),
        })?;
        if mv.function == FN_STEP {
            steps += 1;
            if steps > h.depth_cap {
                let start = crossing(h, &cfg.components[BASE - 1].memory)?;
                return Err(HeteroticError::DepthCapExceeded {
                    start,
                    cap: h.depth_cap,
                });
            }
        }
        *cfg = mv.successor;
    }
    Ok(Some(steps))
}

enum ControlOutcome {
    Replied(Value),
    Terminated,
}

fn control_phase(
    h: &HeteroticSystem,
    cfg: &mut SystemConfiguration,
    round: usize,
    outputs: &mut Vec<Symbol>,
) -> Result<ControlOutcome, HeteroticError> {
    let sys = &h.as_system;
    for _ in 0..CONTROL_STEP_LIMIT {
        let state = cfg.components[CONTROL - 1].state.clone();
        if h.control.communicating_states.contains(&state) {
            return Ok(ControlOutcome::Replied(communicate(
                sys, cfg, CONTROL, round,
            )?));
        }
        let mut fired = None;
        for sym in &h.control.base.inputs {
            if let Some(mv) = ordinary(sys, cfg, CONTROL, sym)? {
                fired = Some(mv);
                break;
            }
        }
        match fired {
            Some(mv) => {
                outputs.extend(mv.output.clone());
                *cfg = mv.successor;
            }
            None if h.control.base.terminal_states.contains(&state) => {
                return Ok(ControlOutcome::Terminated)
            }
            None => {
                return Err(HeteroticError::Deadlock {
                    round,
                    reason: format!("Control is stuck in {state}"),
                })
            }
        }
    }
    Err(HeteroticError::Deadlock {
        round,
        reason: format!("Control took more than {CONTROL_STEP_LIMIT} steps without replying"),
    })
}

/// Runs up to `rounds` rounds. Each round the Base computes to a halted
/// configuration (or the oracle does so in its place), the result crosses
/// to Control, and Control either sends back a new initial configuration
/// or terminates.
pub fn run_heterotic(
    h: &HeteroticSystem,
    rounds: usize,
    mut oracle: Option<&mut dyn Oracle>,
) -> Result<HeteroticTrace, HeteroticError> {
    if rounds == 0 {
        return Err(HeteroticError::ZeroRounds);
    }
    let sys = &h.as_system;
    let mut cfg = sys.initial_configuration();
    let mut trace = HeteroticTrace {
        schema: crate::suite::SCHEMA_VERSION,
        seed: h.branch.seed(),
        rounds: 0,
        exchanges: Vec::new(),
        control_outputs: Vec::new(),
        ended: RunEnd::RoundsExhausted,
    };
    for round in 1..=rounds {
        trace.rounds = round;
        let steps = base_phase(h, &mut cfg, round, &mut oracle)?;
        let sent = communicate(sys, &mut cfg, BASE, round)?;
        trace.exchanges.push(Exchange {
            round,
            direction: Direction::BaseToControl,
            configuration: crossing(h, &sent)?,
            steps,
        });
        match control_phase(h, &mut cfg, round, &mut trace.control_outputs)? {
            ControlOutcome::Replied(v) => trace.exchanges.push(Exchange {
                round,
                direction: Direction::ControlToBase,
                configuration: crossing(h, &v)?,
                steps: None,
            }),
            ControlOutcome::Terminated => {
                trace.ended = RunEnd::ControlTerminated;
                break;
            }
        }
    }
    Ok(trace)
}
