use serde::Serialize;

/// Short, stable identifier of a serializable value (FNV-1a over its
/// canonical JSON), used to key caches and label runs.
pub fn stable_id<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_string(value).unwrap_or_default();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in json.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_stable_and_distinguish_values() {
        assert_eq!(stable_id(&[1, 2, 3]), stable_id(&[1, 2, 3]));
        assert_ne!(stable_id(&[1, 2, 3]), stable_id(&[1, 2, 4]));
        assert_eq!(stable_id(&[1, 2, 3]).len(), 16);
    }
}
