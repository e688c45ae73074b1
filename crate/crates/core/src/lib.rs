//! Laminar swirling capillary jets: trivial flows, dispersion relation,
//! spectral certificates, closed-form oracles and a continuation solver for
//! axisymmetric capillary waves.

pub mod cli;
pub mod closed_form;
pub mod dispersion;
pub mod model;
pub mod ode;
pub mod output;
pub mod quadrature;
pub mod roots;
pub mod special;
pub mod spectral;
pub mod trivial_flow;
pub mod validation;
pub mod wave;

pub use model::{FlowParameters, JetModel, SwirlFunction, VorticityFunction};
pub use trivial_flow::{solve_trivial, TrivialFlowProfile};
