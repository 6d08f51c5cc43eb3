//! Dataset download, verification, and caching.
//!
//! Files are fetched as gzip IDX archives, decompressed, checked
//! against pinned SHA-256 digests of the decompressed payload where a
//! trusted digest is known, parsed for structural sanity, and then
//! written into the cache layout the loader expects. A file whose
//! target already exists and verifies is left untouched.

use std::fs;
use std::io::Read;
use std::path::Path;

use probekit::data::idx::{decode_maybe_gzip, parse_idx_images, parse_idx_labels};
use probekit::data::{dataset_paths, DatasetKind, Split};
use probekit::{Error, Result};
use sha2::{Digest, Sha256};

/// One dataset file: its download URL and, when available, the pinned
/// digest of the decompressed IDX payload.
struct SourceFile {
    url: String,
    split: Split,
    images: bool,
    sha256: Option<&'static str>,
}

const MNIST_BASE: &str = "https://storage.googleapis.com/cvdf-datasets/mnist";
const FASHION_BASE: &str = "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com";

/// Remote basenames in `(train-images, train-labels, test-images,
/// test-labels)` order, shared by both sources.
const REMOTE_NAMES: [(&str, Split, bool); 4] = [
    ("train-images-idx3-ubyte.gz", Split::Train, true),
    ("train-labels-idx1-ubyte.gz", Split::Train, false),
    ("t10k-images-idx3-ubyte.gz", Split::Test, true),
    ("t10k-labels-idx1-ubyte.gz", Split::Test, false),
];

/// Digests of the decompressed payloads, in `REMOTE_NAMES` order. Only
/// the primary dataset has trusted pinned values; the other source gets
/// structural validation, and its computed digest is printed for manual
/// comparison.
const MNIST_SHA256: [&str; 4] = [
    "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db",
    "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5",
    "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7",
    "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2",
];

fn sources(dataset: DatasetKind) -> Vec<SourceFile> {
    let base = match dataset {
        DatasetKind::Mnist => MNIST_BASE,
        DatasetKind::Fashion => FASHION_BASE,
    };
    REMOTE_NAMES
        .iter()
        .enumerate()
        .map(|(i, &(name, split, images))| SourceFile {
            url: format!("{base}/{name}"),
            split,
            images,
            sha256: match dataset {
                DatasetKind::Mnist => Some(MNIST_SHA256[i]),
                DatasetKind::Fashion => None,
            },
        })
        .collect()
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn download(url: &str) -> Result<Vec<u8>> {
    let mut response = ureq::get(url).call().map_err(|e| Error::Download {
        url: url.to_string(),
        reason: e.to_string(),
    })?;
    let mut bytes = Vec::new();
    // The largest expected archive is ~26MB; the cap only bounds a
    // misbehaving server.
    response
        .body_mut()
        .as_reader()
        .take(256 * 1024 * 1024)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Download {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
    Ok(bytes)
}

/// Validates decompressed IDX bytes: digest when pinned, then a full
/// parse, then the split-specific example count.
fn verify(source: &SourceFile, dataset: DatasetKind, bytes: &[u8], path: &Path) -> Result<()> {
    let digest = hex_digest(bytes);
    match source.sha256 {
        Some(expected) if digest != expected => {
            return Err(Error::Checksum {
                path: path.to_path_buf(),
                expected: expected.to_string(),
                got: digest,
            })
        }
        Some(_) => println!("  sha256 verified: {digest}"),
        None => println!(
            "  sha256 (no pinned value for {}): {digest}",
            dataset.dir_name()
        ),
    }
    let count = if source.images {
        parse_idx_images(bytes)?.len()
    } else {
        parse_idx_labels(bytes)?.len()
    };
    let expected = match source.split {
        Split::Train => 60_000,
        Split::Test => 10_000,
    };
    if count != expected {
        return Err(Error::format(format!(
            "{} holds {count} examples, expected {expected}",
            path.display()
        )));
    }
    Ok(())
}

/// Downloads and caches every file of a dataset under
/// `cache_dir/<dataset>/`. Existing files that verify are kept.
pub fn fetch_dataset(dataset: DatasetKind, cache_dir: &Path) -> Result<()> {
    let dir = cache_dir.join(dataset.dir_name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    for source in sources(dataset) {
        let (images_path, labels_path) = dataset_paths(cache_dir, dataset, source.split);
        let target = if source.images {
            images_path
        } else {
            labels_path
        };

        if target.exists() {
            let existing = fs::read(&target).map_err(|e| Error::io(&target, e))?;
            if verify(&source, dataset, &existing, &target).is_ok() {
                println!("{} already cached", target.display());
                continue;
            }
            println!("{} failed verification, refetching", target.display());
        }

        println!("downloading {}", source.url);
        let raw = download(&source.url)?;
        let decompressed = decode_maybe_gzip(&raw)?.into_owned();
        verify(&source, dataset, &decompressed, &target)?;
        fs::write(&target, &decompressed).map_err(|e| Error::io(&target, e))?;
        println!(
            "  wrote {} ({} bytes)",
            target.display(),
            decompressed.len()
        );
    }
    Ok(())
}
