#pragma once

#include <map>
#include <optional>
#include <string>

#include "afp/fingerprint.hpp"

namespace afp {

struct MatchResult {
  std::string track_id;
  int offset_frames = 0;  // query start relative to the reference
  long raw_hits = 0;
  double score = 0.0;     // raw_hits / query peak count
};

// Open-set store of named fingerprints. All entries share one config
// digest, fixed by the first ingest. Queries are read-only; ingest and
// save need exclusive access.
struct FingerprintDb {
  std::map<std::string, Fingerprint> entries;
  std::optional<std::uint64_t> digest;
};

// Adds or replaces an entry. Throws on digest mismatch or on track ids
// containing tab/newline (they would corrupt the index file).
void ingest(FingerprintDb& db, const std::string& track_id, Fingerprint fp);

// Best (entry, time offset) by coincident peak count, found through an
// offset histogram per entry. Ties break toward the smallest offset,
// then the lexicographically smallest id. Returns the result only when
// score >= tau; zero-hit queries never match.
std::optional<MatchResult> query(const FingerprintDb& db, const Fingerprint& q,
                                 double tau);

// Directory layout: one .afp per track plus "index.tsv" with one
// "track_id<TAB>filename" line per entry (UTF-8, LF endings).
void save_db(const FingerprintDb& db, const std::filesystem::path& dir);
FingerprintDb load_db(const std::filesystem::path& dir);

}  // namespace afp
