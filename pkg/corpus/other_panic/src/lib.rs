pub fn parse_level(name: &str) -> u8 {
    match name.trim_end() {
        "debug" => 0,
        "info" => 1,
        "warn" => 2,
        "error" => 3,
        other => panic!("unknown log level: {other:?}"),
    }
}
