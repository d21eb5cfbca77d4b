//! Limb-granular on-chip residency model of the key-switching schedules.

use crate::keyswitch::{digit_count, digit_range, Datapath};

/// Key limbs staged on chip at once while the key streams in.
pub const KEY_STAGING_LIMBS: u64 = 4;
/// Generated limbs buffered between basis conversion and the inner product.
pub const EXT_CHUNK_LIMBS: u64 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResidencyEvent {
    Alloc { what: &'static str, limbs: u64 },
    Free { what: &'static str, limbs: u64 },
}

/// Allocation trace of one key switch at `limbs` ciphertext limbs.
///
/// With `keys_resident` every key column is loaded before the switch starts
/// instead of being streamed digit by digit.
pub fn keyswitch_schedule(
    limbs: usize,
    alpha: usize,
    datapath: Datapath,
    keys_resident: bool,
) -> Vec<ResidencyEvent> {
    use ResidencyEvent::{Alloc, Free};
    let mut ev = Vec::new();
    if limbs == 0 {
        return ev;
    }
    let raised = (limbs + alpha) as u64;
    let digits = digit_count(limbs, alpha);
    if keys_resident {
        ev.push(Alloc { what: "keys", limbs: 2 * digits as u64 * raised });
    }
    ev.push(Alloc { what: "accumulator", limbs: 2 * raised });
    match datapath {
        Datapath::Modified => {
            for j in 0..digits {
                let src = digit_range(j, alpha, limbs).len() as u64;
                let mut remaining = raised - src;
                ev.push(Alloc { what: "digit", limbs: src });
                if !keys_resident {
                    ev.push(Alloc { what: "key staging", limbs: KEY_STAGING_LIMBS });
                }
                while remaining > 0 {
                    let c = remaining.min(EXT_CHUNK_LIMBS);
                    ev.push(Alloc { what: "extension chunk", limbs: c });
                    ev.push(Free { what: "extension chunk", limbs: c });
                    remaining -= c;
                }
                if !keys_resident {
                    ev.push(Free { what: "key staging", limbs: KEY_STAGING_LIMBS });
                }
                ev.push(Free { what: "digit", limbs: src });
            }
        }
        Datapath::Reference => {
            // Every digit is raised in full before the inner product starts.
            ev.push(Alloc { what: "raised digits", limbs: digits as u64 * raised });
            if !keys_resident {
                ev.push(Alloc { what: "key staging", limbs: KEY_STAGING_LIMBS });
                ev.push(Free { what: "key staging", limbs: KEY_STAGING_LIMBS });
            }
            ev.push(Free { what: "raised digits", limbs: digits as u64 * raised });
        }
    }
    let moddown = (2 * limbs as u64).min(EXT_CHUNK_LIMBS);
    ev.push(Alloc { what: "mod-down chunk", limbs: moddown });
    ev.push(Free { what: "mod-down chunk", limbs: moddown });
    ev.push(Free { what: "accumulator", limbs: 2 * raised });
    if keys_resident {
        ev.push(Free { what: "keys", limbs: 2 * digits as u64 * raised });
    }
    ev
}

/// Largest number of simultaneously resident limbs.
pub fn peak_limbs(events: &[ResidencyEvent]) -> u64 {
    let mut cur = 0u64;
    let mut peak = 0u64;
    for e in events {
        match e {
            ResidencyEvent::Alloc { limbs, .. } => {
                cur += limbs;
                peak = peak.max(cur);
            }
            ResidencyEvent::Free { limbs, .. } => cur -= limbs,
        }
    }
    peak
}
