pub fn average(values: &[u32]) -> u32 {
    let sum: u32 = values.iter().sum();
    let count = values.len() as u32;
    sum / count
}
