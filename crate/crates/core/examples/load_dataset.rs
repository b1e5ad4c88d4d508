//! Reading a dataset file, with the errors a malformed file produces.

use gadcl::graph::graph_from_json;

fn main() {
    let good = r#"{
        "name": "toy",
        "num_nodes": 4,
        "features": [[1, 0], [0, 1], [1, 1], [0, 0]],
        "edges": [[0, 1], [1, 2], [2, 1], [2, 3]],
        "labels": [0, 0, 1, 0]
    }"#;
    let g = graph_from_json(good, "toy").expect("valid file");
    println!(
        "{}: {} nodes, {} edges (reversed duplicate merged)",
        g.name(),
        g.num_nodes(),
        g.num_edges()
    );
    println!("neighbors of 2: {:?}", g.neighbors(2));

    let broken = [
        (
            "self-loop",
            r#"{"num_nodes": 2, "features": [[1], [2]], "edges": [[1, 1]]}"#,
        ),
        (
            "out of range",
            r#"{"num_nodes": 2, "features": [[1], [2]], "edges": [[0, 2]]}"#,
        ),
        (
            "ragged features",
            r#"{"num_nodes": 2, "features": [[1, 2], [3]], "edges": []}"#,
        ),
        (
            "unknown key",
            r#"{"num_nodes": 1, "features": [[1]], "edges": [], "weights": []}"#,
        ),
        (
            "bad label",
            r#"{"num_nodes": 1, "features": [[1]], "edges": [], "labels": [2]}"#,
        ),
    ];
    for (what, text) in broken {
        let err = graph_from_json(text, what).unwrap_err();
        println!("{what:>16}: kind={} {err}", err.kind());
    }
}
