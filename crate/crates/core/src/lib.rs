//! Orthogonal Latin squares by CDCL search coupled with the Euler-Parker
//! exact-cover procedure.
//!
//! * [`latin`]: squares, transversals, orthogonality and colourings.
//! * [`exactcover`]: exhaustive 0-1 linear Diophantine solver.
//! * [`eulerparker`]: the two-stage mate construction.
//! * [`encoder`]: CNF encodings and DIMACS output.
//! * [`satengine`]: CDCL solver with an external propagator hook.
//! * [`hybrid`]: the solver/Euler-Parker driver.
//! * [`batch`]: data-parallel helpers and the benchmark matrix.

pub mod latin;
pub mod exactcover;
pub mod eulerparker;
pub mod encoder;
pub mod satengine;
pub mod hybrid;
pub mod batch;
