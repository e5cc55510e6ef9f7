"""
A bounds-check-bypass gadget against the non-interference oracles
=================================================================

The classic universal read gadget: an in-bounds check guards an array
access, but under adversarial speculation the check can be bypassed and
a secret byte is encoded into the address of a shared-memory access.
This script shows the brute-force oracle catching it, the shrunk witness
pair, and how the safe hardware mode closes the channel.
"""

from rmikit import (INSECURE, SAFE, SEQ, SHM, SPEC, check_direct_ni,
                    check_hw_satisfies_one, load_entry)

entry = load_entry("spectre_v1")
print(entry.source)

# ---------------------------------------------------------------------
# Direct non-interference: equal public inputs must give equal trace
# sets. The policy makes a0 (the index) public and the private array
# secret; the state space varies the index over an in-bounds and an
# out-of-bounds value, and one secret byte.

spec = check_direct_ni(entry.program, (SHM, SPEC), entry.policy,
                       entry.space, entry.layout)
print("direct NI, shm/spec:", "holds" if spec.holds else "violated")

a, b = spec.witness
diff = {addr: (a.private_mem.get(addr, 0), b.private_mem.get(addr, 0))
        for addr in set(a.private_mem) | set(b.private_mem)
        if a.private_mem.get(addr, 0) != b.private_mem.get(addr, 0)}
print("witness pair differs only in:",
      {hex(addr): values for addr, values in diff.items()})

# The differing secret byte lands in the address of a shared access, so
# the two trace sets under speculation are distinguishable. Without
# speculation the guard works and the same check holds:

seq = check_direct_ni(entry.program, (SHM, SEQ), entry.policy,
                      entry.space, entry.layout)
print("direct NI, shm/seq:", "holds" if seq.holds else "violated")

# ---------------------------------------------------------------------
# Hardware modes. The insecure mode exposes the full speculative
# shared-memory trace and leaks; the safe mode delays shared accesses
# until they are non-speculative and satisfies the sequential contract.

for mode in (INSECURE, SAFE):
    verdict = check_hw_satisfies_one(entry.program, mode, (SHM, SEQ),
                                     entry.space, entry.layout)
    print(f"{mode.kind} mode satisfies shm/seq:",
          "yes" if verdict.holds else "no")
