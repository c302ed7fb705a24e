pub mod grid;
pub mod oracle;
pub mod qp;
