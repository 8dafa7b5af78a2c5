//! Writes the catalog models as JSON documents into a directory
//! (default `models/`).

use artipose::kinematics::{catalog, ModelDocument};

fn main() -> artipose::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "models".into());
    std::fs::create_dir_all(&dir)?;
    for model in catalog::standard_models() {
        let path = std::path::Path::new(&dir).join(format!("{}.json", model.id()));
        std::fs::write(&path, ModelDocument::from_model(&model).to_json()?)?;
        println!("{}", path.display());
    }
    Ok(())
}
