pub mod linalg;
pub mod normal;
pub mod opt;
pub mod quad;
