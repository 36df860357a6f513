#pragma once

#include <string>

#include "swapsim/tagstream.hpp"

// Binary time-tag interchange. Little-endian throughout.
//
// layout:
//   header, 16 bytes: magic "SWTG", u16 version (1), u16 tick resolution in ps,
//                     u32 record count, u32 truth table count
//   records, 12 bytes each: u64 tag, u8 channel (a..h = 0..7, 8 = unassigned),
//                     u8 flags (bit0: truth entry present), u16 truth table index
//   truth table, 12 bytes each: u64 pulse index, i8 photon (0..3), 3 pad bytes
//
// The truth index is 16 bits, so at most 65535 annotated events survive a round
// trip; later events keep their tags and channels but drop the annotation.
namespace swapsim::tagio {

void export_tags(const tagstream::TagStream& stream, const std::string& path);

// Recorder identity and block length are not part of the file; callers assign them.
tagstream::TagStream import_tags(const std::string& path);

}  // namespace swapsim::tagio
