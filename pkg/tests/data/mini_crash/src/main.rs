fn main() {
    let data = vec![1, 2, 3];
    let n = std::env::args().count() + 1;
    println!("{}", mini_crash::pick(&data, n));
}
