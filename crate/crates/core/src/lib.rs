pub mod autodiff;
pub mod benchmarks;
pub mod flux;
pub mod fv;
pub mod linalg;
pub mod metrics;
pub mod networks;
pub mod selftest;
pub mod training;
