// placeholder
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub step: f64,
}
