pub mod bounds;
pub mod code;
pub mod constructions;
pub mod error;
pub mod field;
pub mod geometry;
pub mod multiset;
pub mod oracle;
pub mod search;
pub mod tables;
