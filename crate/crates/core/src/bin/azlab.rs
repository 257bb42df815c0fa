fn main() {
    println!("azlab");
}
