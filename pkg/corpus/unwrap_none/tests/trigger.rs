use unwrap_none::Config;

#[test]
fn trigger_panic() {
    let cfg = Config::parse("host = example.org");
    let _ = cfg.port();
}
