#![no_main]

use libfuzzer_sys::fuzz_target;

use invargeo::manifest::DatasetManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(manifest) = DatasetManifest::parse(s) {
            // a parsed manifest must always yield a usable point set
            let ps = manifest.to_point_set().expect("parsed manifests are valid");
            assert_eq!(ps.len(), manifest.samples.len());
        }
    }
});
