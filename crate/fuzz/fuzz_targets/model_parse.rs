#![no_main]

use libfuzzer_sys::fuzz_target;

use invargeo::classifier::Model;
use invargeo::geometry::Signal;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(model) = Model::from_json(s) {
            // a parsed model must round-trip and evaluate without panicking
            let again = Model::from_json(&model.to_json()).expect("round trip");
            assert_eq!(model, again);
            if model.dim() > 0 && model.dim() <= 1 << 16 {
                let x = Signal::new(vec![0.5; model.dim()]).unwrap();
                let _ = invargeo::classifier::forward(&model, &x);
            }
        }
    }
});
