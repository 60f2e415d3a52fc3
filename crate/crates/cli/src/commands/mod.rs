pub mod arc;
pub mod bench;
pub mod measure;
pub mod validate;
