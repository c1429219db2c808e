#[test]
fn cfg_diff() {
    let config = plantinit::config::RunConfig::demo();
    let json = config.to_json();
    let back = plantinit::config::RunConfig::from_json(&json).unwrap();
    let json2 = back.to_json();
    if json != json2 {
        for (i, (a, b)) in json.lines().zip(json2.lines()).enumerate() {
            if a != b {
                println!("line {i}:\n  first:  {a}\n  second: {b}");
            }
        }
    }
}
