pub mod fitdemo;
pub mod qed;
pub mod report;
pub mod simulate;
pub mod stats;
