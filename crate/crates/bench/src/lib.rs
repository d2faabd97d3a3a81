//! Synthetic repository generators shared by the benchmarks.

use repoctx_core::SourceFile;

/// A deterministic repository of interlinked modules: each file imports its
/// neighbor, defines a class with two methods, and a top-level function that
/// instantiates the imported class.
pub fn synthetic_repo(n_files: usize, filler_lines: usize) -> Vec<SourceFile> {
    (0..n_files)
        .map(|i| {
            let next = (i + 1) % n_files;
            let mut text = format!(
                "from pkg.mod_{next:03} import Handler{next:03}\n\n\nclass Handler{i:03}:\n    limit = {i}\n\n    def fetch(self, request):\n        backend = Handler{next:03}()\n        return backend.prepare(request)\n\n    def prepare(self, request):\n        return dict(request=request, owner={i})\n"
            );
            for k in 0..filler_lines {
                text.push_str(&format!(
                    "row_{i:03}_{k:03} = \"filler value {k} for module {i}\"\n"
                ));
            }
            text.push_str(&format!(
                "\n\ndef run_{i:03}(request):\n    worker = Handler{i:03}()\n    return worker.fetch(request)\n"
            ));
            SourceFile::new(format!("pkg/mod_{i:03}.py"), text)
        })
        .collect()
}

/// The query window used by the retrieval benchmarks.
pub fn query_chunk() -> String {
    "class Handler000:\n    def fetch(self, request):\n        backend = Handler001()\n        return backend.prepare(request)"
        .to_string()
}
