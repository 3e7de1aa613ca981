pub mod dag;
pub mod tables;

pub use dag::{read_dag_json, write_dag_json, write_dot};
pub use tables::{read_table, write_table, AblationRow, PlotRow, PttRow, RunRow, SummaryRow, TraceRow};
