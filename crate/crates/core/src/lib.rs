//! Modelling and test generation for stream X-machines, communicating
//! stream X-machine systems, P systems and heterotic Base/Control systems.

pub mod automaton;
pub mod cli;
pub mod csxms;
pub mod dft;
pub mod fsm;
pub mod heterotic;
pub mod mutation;
pub mod psystem;
pub mod suite;
pub mod sxm;
pub mod term;
pub mod value;

pub use automaton::Automaton;
pub use dft::{check_dft, DftReport};
pub use suite::{generate_sxm_test_suite, TestCase, TestSuite};
pub use sxm::{Sxm, SxmConfiguration};
pub use value::{Multiset, Value};
