//! Reference computations for checking skyroute against values derived by
//! independent means (enumeration, breadth-first search, arbitrary
//! precision, min-cut partitioning). Nothing here shares code with the
//! implementation under test.

pub mod paths;
pub mod placement;
pub mod precise;
pub mod rentfit;
