//! Discrete-event simulation of synchronous federated learning over a LEO
//! Walker constellation, with intra-plane ISL distribution and in-network
//! partial aggregation (FedISL) next to the direct-contact baseline (FedNonISL).

// `!(x > 0.0)` guards are deliberate: they reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod learning;
pub mod link;
pub mod orbital;
pub mod protocol;
pub mod sim;
