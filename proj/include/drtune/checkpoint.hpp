#pragma once

#include <string>
#include <vector>

#include "drtune/denoiser.hpp"

namespace drtune {

// Little-endian binary checkpoint: magic "DRTL", version u32, block
// count u32; per block name (u16 length + bytes), rank u8, dims u32
// each, then f64 values row-major.
void save_blocks(const std::string& path, const std::vector<ParamBlock>& blocks);
std::vector<ParamBlock> load_blocks(const std::string& path);

// Model-level wrappers; shape metadata travels in a "__meta__" block.
void save_denoiser(const std::string& path, const Denoiser& model);
Denoiser load_denoiser(const std::string& path);

void save_adapter(const std::string& path, const LoRAAdapter& adapter);
LoRAAdapter load_adapter(const std::string& path);

}  // namespace drtune
