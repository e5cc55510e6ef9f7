"""
Last-level cache set partitioning and zero-device flushes
=========================================================

A shared last-level cache is a cross-enclave channel unless eviction is
contained. The model here partitions cache sets between isolation
regions with a per-region (base, size) table: an address in region r
maps to set base_r + (original_index mod size_r), so two regions with
disjoint ranges can never evict each other's lines. Flushing a region
is done purely with loads from a "zero device" address range that
aliases the cache geometry but always reads zero.
"""

import random

from rmikit import (Geometry, PartitionTable, PartitionedCache,
                    load_reference_table)
from rmikit.llc import region_of, remap_set_index, zero_device_address

geometry = Geometry()
print(f"geometry: {geometry.total_bytes // 1024} KiB, {geometry.ways} ways, "
      f"{geometry.line_bytes} B lines -> {geometry.total_sets} sets")

# ---------------------------------------------------------------------
# The reference layout: a small security-monitor region, one big enclave
# region, a few medium regions, and single-set slots for the rest.

table = load_reference_table()
for region in (0, 1, 2, 5, 63):
    base, size = table.entries[region]
    print(f"  region {region:2d}: sets [{base}, {base + size})")
print("sets allocated in total:",
      sum(size for _, size in table.entries.values()))

# Address-to-set mapping in action: two addresses with the same original
# index but different regions land in disjoint sets.
addr_a = (1 << 25) | (5 * geometry.line_bytes)
addr_b = (2 << 25) | (5 * geometry.line_bytes)
print("same index, regions", region_of(addr_a), "and", region_of(addr_b),
      "-> sets", remap_set_index(addr_a, table)[1],
      "and", remap_set_index(addr_b, table)[1])

# ---------------------------------------------------------------------
# Isolation: hammer region 2 with random accesses and confirm a line
# cached by region 1 is never evicted.

cache = PartitionedCache(table)
victim = (1 << 25) | (9 * geometry.line_bytes)
cache.access(victim)
rng = random.Random(0)
for _ in range(5000):
    cache.access((2 << 25) | (rng.randrange(4096) * geometry.line_bytes))
print("victim line still cached after 5000 foreign accesses:",
      cache.access(victim))

# ---------------------------------------------------------------------
# Flush on teardown: walking the zero device covers every (set, way) of
# the region, evicting whatever was there and leaving only lines that
# read as zero. Cost is exactly sets x ways accesses.

base, size = table.entries[1]
lines_before = len(cache.lines_of_region(1))
cost = cache.flush_region(1)
print(f"flush region 1: {lines_before} real lines evicted with "
      f"{cost} zero-device accesses "
      f"(= {size} sets x {geometry.ways} ways)")
print("real lines left in region 1:", cache.lines_of_region(1))
print("one zero-device address:",
      hex(zero_device_address(1, 0, 0)))

# Reconfiguring the table is only legal with no enclave running and the
# security-monitor region pinned; affected sets are flushed on the way.
new_entries = dict(table.entries)
new_entries[1] = (table.entries[1][0], 128)
cache.configure(PartitionTable(entries=new_entries, geometry=geometry),
                running_enclaves=0)
print("reconfigured region 1 to", cache.table.entries[1])
