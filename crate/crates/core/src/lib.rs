pub mod coeffs;
pub mod descent;
pub mod error;
pub mod etale;
pub mod json;
pub mod koszul;
pub mod lattices;
pub mod linalg;
pub mod matrix;
pub mod par;
pub mod random;
pub mod semilinear;
pub mod series;
pub mod zmod;

pub use error::{Error, Result};
