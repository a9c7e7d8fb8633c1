pub mod classes;
pub mod coding_tree;
pub mod degrees;
pub mod enumerated;
pub mod experiments;
pub mod structures;
pub mod types;
