pub mod kernel;
pub mod linalg;
pub mod opfactory;
pub mod pdms;
pub mod sampling;
