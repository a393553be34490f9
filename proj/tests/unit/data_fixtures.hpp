// Copyright (c) 2026 The capsr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Frozen reference data for the data tests. The resampling values come
// from Pillow's float-mode BICUBIC resize (a = -0.5, support widened when
// shrinking); the PNG is a 2x2 RGB file written by the same library.

#pragma once

#include <array>
#include <cstdint>

namespace capsr::fixtures {

// Pixels: (255, 0, 0) (0, 255, 0) / (0, 0, 255) (10, 20, 30).
inline constexpr std::array<uint8_t, 79> kPng2x2{
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d,
    0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02,
    0x08, 0x02, 0x00, 0x00, 0x00, 0xfd, 0xd4, 0x9a, 0x73, 0x00, 0x00, 0x00,
    0x16, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0xcf, 0xc0, 0xc0,
    0xf0, 0x9f, 0x81, 0x81, 0x81, 0xe1, 0x3f, 0x97, 0x88, 0x1c, 0x00, 0x1a,
    0x58, 0x03, 0x3a, 0x82, 0xe0, 0xab, 0x53, 0x00, 0x00, 0x00, 0x00, 0x49,
    0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

inline constexpr std::array<double, 256> kResizeSrc16{
        159.399338, 228.789520, 197.799850, 57.427834, 76.542404, 222.756134, 1.342653, 209.413254, 203.252701, 119.323410, 77.273270, 70.998528, 64.991745, 113.494461, 128.659805, 141.141830,
    253.852570, 202.128784, 158.655701, 252.184845, 54.903717, 40.854069, 156.197601, 11.205212, 9.098471, 131.296646, 118.882538, 233.877777, 160.452698, 131.100006, 126.702728, 63.116306,
    3.007477, 49.062546, 176.468185, 51.154716, 94.231758, 0.952232, 211.662170, 39.387577, 68.237823, 224.484695, 129.996658, 216.023315, 163.127884, 189.151596, 23.331379, 137.991669,
    129.481918, 222.191544, 92.122337, 152.536942, 15.109169, 98.846107, 82.374268, 38.300930, 208.166214, 96.758774, 249.580704, 150.447876, 154.289337, 162.689133, 172.494812, 38.450943,
    112.279938, 61.088810, 102.637070, 24.659544, 246.796158, 54.826031, 171.300110, 76.607124, 222.889648, 168.864761, 33.562035, 215.493958, 240.961777, 230.498779, 145.278381, 37.092289,
    49.078190, 236.615952, 140.843262, 46.040886, 225.434509, 163.600784, 145.272034, 95.953400, 104.793594, 61.069748, 9.704608, 223.435791, 119.271202, 139.646973, 82.151642, 191.587860,
    6.425202, 94.907242, 7.739325, 31.337486, 246.622803, 167.728989, 109.196159, 133.553726, 222.566345, 87.773720, 150.524200, 174.339508, 90.630516, 132.370117, 195.138077, 231.840729,
    38.520882, 238.021942, 1.320611, 192.009262, 206.684341, 34.874832, 106.820435, 207.890350, 3.639153, 160.257797, 202.221039, 130.815918, 185.091599, 57.737988, 50.622894, 92.597374,
    45.748535, 88.245667, 241.771637, 146.199844, 86.717354, 69.238777, 242.770065, 113.341942, 250.000656, 131.458282, 132.897369, 228.617828, 189.405685, 148.066483, 108.795624, 223.937897,
    104.969765, 235.303696, 17.522415, 109.649200, 132.476273, 242.489243, 64.004807, 205.539978, 172.500153, 182.856903, 160.553650, 247.747986, 84.833771, 101.560265, 51.742496, 12.929534,
    54.291588, 233.443420, 214.243042, 28.663464, 153.963654, 122.195107, 151.644638, 168.115128, 78.198174, 245.144470, 118.789207, 160.165710, 161.982681, 46.891796, 15.775681, 104.936790,
    194.827667, 207.881561, 186.147263, 28.867264, 232.905487, 204.519333, 223.811295, 133.442566, 233.487030, 11.896320, 7.723653, 5.154971, 64.456017, 63.385292, 47.813351, 144.599228,
    9.941389, 150.548904, 42.332844, 172.857788, 5.374216, 79.195404, 239.277023, 137.291077, 206.954788, 167.796646, 155.741455, 48.769432, 146.470657, 10.120037, 204.424423, 244.818085,
    217.772308, 12.930960, 86.358322, 81.090813, 28.742832, 159.786011, 203.351837, 79.998978, 220.016357, 203.267365, 32.930176, 195.549088, 225.068283, 50.307056, 146.278503, 162.881241,
    155.380234, 24.542648, 168.603821, 161.148453, 210.090805, 204.895737, 83.427895, 184.122070, 221.154709, 227.701675, 41.185642, 6.809099, 165.955902, 54.742451, 143.745987, 240.925156,
    96.726501, 64.457512, 116.410065, 167.597198, 25.780237, 97.049118, 34.098904, 168.923782, 211.790894, 96.097717, 94.789604, 137.578018, 54.839733, 63.089447, 84.112335, 116.643555};

// kResizeSrc16 resized to 8 x 8.
inline constexpr std::array<double, 64> kResizeDst8{
        193.684875, 157.885315, 94.442482, 100.237762, 112.756332, 129.512451, 125.961388, 112.596481,
    112.597969, 121.429779, 67.575180, 88.863022, 136.470047, 186.146957, 174.997482, 95.355598,
    116.326294, 94.941139, 159.298523, 120.883568, 124.782303, 127.566956, 181.340683, 130.734253,
    84.168747, 101.892006, 154.442535, 134.442001, 124.392616, 156.946152, 121.411156, 145.834229,
    123.650230, 135.252060, 126.725487, 157.953583, 171.454865, 191.575409, 133.790695, 84.866386,
    173.315598, 124.133461, 157.554169, 170.905060, 141.993896, 91.478668, 74.097000, 77.976585,
    103.877121, 91.727219, 112.106560, 174.115356, 177.841568, 100.821838, 107.475685, 171.757507,
    91.038643, 131.402527, 126.033951, 131.286118, 184.286621, 85.126625, 91.213875, 136.191147};

struct UpSample {
  int y;
  int x;
  double v;
};

// kResizeSrc16 resized to 48 x 48, selected interior pixels.
inline constexpr std::array<UpSample, 9> kResizeUp48{{
    {10, 12, 51.863350},
    {10, 27, 124.739548},
    {10, 35, 143.931808},
    {20, 12, 204.849442},
    {20, 27, 120.531036},
    {20, 35, 141.513412},
    {33, 12, 160.163849},
    {33, 27, 110.456528},
    {33, 35, 60.420578}}};

}  // namespace capsr::fixtures
