//! Roofline cost modelling, latency-aware compound scaling and a small
//! architecture search for accelerator-oriented CNNs.

pub mod arch_ir;
pub mod cost_model;
pub mod lacs;
pub mod nas_lite;
pub mod report;
