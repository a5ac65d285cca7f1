#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bikevol/ingest/bundle.hpp"

namespace bikevol::ingest {

// Source names accepted by source_schema and the file each one is stored in.
const std::vector<std::string>& source_names();
std::string source_file(std::string_view source);

/// Exact column contract of a tabular source (header order). For the street graph and the
/// snapshot feed, which are JSON, the list names the required properties instead.
std::vector<std::string> source_schema(std::string_view source);

/// Reads and validates a bundle directory. Schema mismatches, unresolved foreign keys and
/// out-of-period dates raise DataError with file/line context.
SourceBundle load_bundle(const std::string& directory);

/// Writes every source under `directory` (created if needed). Output is deterministic.
void save_bundle(const SourceBundle& bundle, const std::string& directory);

// Individual readers, exposed for the CLI and tests.
std::vector<HourlyCount> read_hourly_counts(const std::string& path,
                                            const std::vector<Station>* stations = nullptr);
void write_hourly_counts(const std::vector<HourlyCount>& counts, const std::string& path);
StreetGraph read_street_graph(const std::string& path);
void write_street_graph(const StreetGraph& graph, const std::string& path);
std::vector<AvailabilitySnapshot> read_snapshots(const std::string& path);
void write_snapshots(const std::vector<AvailabilitySnapshot>& snapshots, const std::string& path);
std::vector<Trip> read_trips(const std::string& path);
// Routed fields are written when present (routed_distance, mean_speed, unroutable).
void write_trips(const std::vector<Trip>& trips, const std::string& path);

}  // namespace bikevol::ingest
