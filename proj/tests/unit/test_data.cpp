/*
 * Copyright 2026 The EDS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "eds/data/artifact.hpp"
#include "eds/data/dataset.hpp"
#include "eds/data/format.hpp"
#include "eds/data/render.hpp"
#include "eds/errors.hpp"

using namespace eds;

namespace {

TaskConfig small_task(std::size_t per_class = 50) {
  TaskConfig t;
  t.classes = {ShapeKind::ellipse, ShapeKind::heart};
  t.per_class = per_class;
  t.spurious_class = 1;
  t.artifact = ArtifactSpec::stripe();
  t.seed = 3;
  return t;
}

std::vector<LabeledExample> blank_partition(std::size_t per_class, int classes) {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < per_class * static_cast<std::size_t>(classes); ++i) {
    LabeledExample e;
    e.image = Image({8, 8, 1});
    e.label = static_cast<int>(i % static_cast<std::size_t>(classes));
    e.mask = Mask::Zero(8, 8);
    e.mask(4, 4) = 1;
    retag(e, 0);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

TEST(Render, CenteredSquareIsPixelBlock) {
  SpriteSpec s;
  s.shape = ShapeKind::square;
  s.center_x = 8;
  s.center_y = 8;
  s.scale = 2;
  const auto ex = render_sprite(s, {16, 16, 1});
  Mask expected = Mask::Zero(16, 16);
  expected.block(6, 6, 4, 4).setOnes();
  EXPECT_EQ(ex.mask, expected);
  EXPECT_FLOAT_EQ(ex.image.pixels.sum(), 16.0f);
}

TEST(Render, ZeroScaleIsRejected) {
  SpriteSpec s;
  s.shape = ShapeKind::ellipse;
  s.center_x = s.center_y = 8;
  s.scale = 0;
  EXPECT_THROW(render_sprite(s, {16, 16, 1}), GenerationError);
}

TEST(Render, OutOfBoundsIsRejected) {
  SpriteSpec s;
  s.center_x = 1;
  s.center_y = 8;
  s.scale = 3;
  EXPECT_THROW(render_sprite(s, {16, 16, 1}), GenerationError);
}

TEST(Render, HeartMatchesImplicitCurve) {
  SpriteSpec s;
  s.shape = ShapeKind::heart;
  s.center_x = 32;
  s.center_y = 32;
  s.scale = 12;
  const auto ex = render_sprite(s, {64, 64, 1});
  auto inside = [&](Index row, Index col) {
    const double x = (col + 0.5 - 32.0) / 12.0;
    const double y = (32.0 - (row + 0.5)) / 12.0;
    const double r = x * x + y * y - 1.0;
    return r * r * r - x * x * y * y * y <= 0.0;
  };
  EXPECT_TRUE(inside(32, 32));
  EXPECT_EQ(ex.mask(32, 32), 1);
  EXPECT_FALSE(inside(0, 0));
  EXPECT_EQ(ex.mask(0, 0), 0);
  for (Index r = 0; r < 64; ++r) {
    for (Index c = 0; c < 64; ++c) ASSERT_EQ(ex.mask(r, c) == 1, inside(r, c)) << r << "," << c;
  }
}

TEST(Render, SceneModeHasThreeChannelsInRange) {
  SpriteSpec s;
  s.shape = ShapeKind::ellipse;
  s.center_x = s.center_y = 32;
  s.scale = 10;
  s.scene = SceneHues{0.1, 0.6, 0.3};
  const auto ex = render_sprite(s, {64, 64, 3});
  EXPECT_GE(ex.image.pixels.minCoeff(), 0.0f);
  EXPECT_LE(ex.image.pixels.maxCoeff(), 1.0f);
  EXPECT_NE(ex.image.at(32, 32, 0), ex.image.at(2, 2, 0));
}

TEST(Artifact, SquareSetsSixteenPixels) {
  Image img({16, 16, 1});
  apply_artifact(img, ArtifactSpec::square(4, 1.0f));
  EXPECT_FLOAT_EQ(img.pixels.sum(), 16.0f);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 4; ++c) EXPECT_FLOAT_EQ(img.at(r, c), 1.0f);
}

TEST(Artifact, StripeColumnNine) {
  Image img({16, 16, 1});
  apply_artifact(img, ArtifactSpec::stripe(9, 1, 1.0f));
  for (Index r = 0; r < 16; ++r) {
    for (Index c = 0; c < 16; ++c) EXPECT_FLOAT_EQ(img.at(r, c), c == 9 ? 1.0f : 0.0f);
  }
}

TEST(Artifact, ZeroNoiseIsIdentity) {
  Image img({8, 8, 1});
  img.pixels.setConstant(0.3f);
  const Image before = img;
  apply_artifact(img, ArtifactSpec::noise(0.0, 1));
  EXPECT_EQ(img, before);
}

TEST(Artifact, NoiseStaysInRange) {
  Image img({8, 8, 3});
  img.pixels.setConstant(0.95f);
  apply_artifact(img, ArtifactSpec::noise(0.5, 1), 7);
  EXPECT_GE(img.pixels.minCoeff(), 0.0f);
  EXPECT_LE(img.pixels.maxCoeff(), 1.0f);
}

TEST(Artifact, ChangesOnlyItsRegion) {
  for (const auto& spec : {ArtifactSpec::square(5, 0.7f), ArtifactSpec::stripe(3, 2, 0.9f)}) {
    Image img({12, 12, 3});
    for (Index i = 0; i < img.pixels.size(); ++i) img.pixels[i] = 0.2f;
    const Image before = img;
    apply_artifact(img, spec);
    const Mask region = artifact_region(spec, img.geometry);
    for (Index r = 0; r < 12; ++r) {
      for (Index c = 0; c < 12; ++c) {
        for (Index ch = 0; ch < 3; ++ch) {
          EXPECT_EQ(img.at(r, c, ch) != before.at(r, c, ch), region(r, c) == 1);
        }
      }
    }
  }
}

TEST(Artifact, ValidationRejectsMisfits) {
  EXPECT_THROW(ArtifactSpec::square(20).validate({16, 16, 1}), ConfigError);
  EXPECT_THROW(ArtifactSpec::stripe(15, 2).validate({16, 16, 1}), ConfigError);
  EXPECT_THROW(ArtifactSpec::square(4, 1.5f).validate({16, 16, 1}), ConfigError);
  EXPECT_THROW(ArtifactSpec::noise(-0.1).validate({16, 16, 1}), ConfigError);
}

TEST(Dataset, PartitionSizes) {
  const auto p = partition_sizes(1000);
  EXPECT_EQ(p.model_train, 800u);
  EXPECT_EQ(p.discriminator_train, 140u);
  EXPECT_EQ(p.validation, 60u);
}

TEST(Dataset, TooFewPerClassIsRejected) {
  EXPECT_THROW(build_dataset(small_task(9)), ConfigError);
  TaskConfig one = small_task();
  one.classes = {ShapeKind::heart};
  EXPECT_THROW(build_dataset(one), ConfigError);
}

TEST(Dataset, DeterministicAndWellFormed) {
  const auto a = build_dataset(small_task());
  EXPECT_EQ(a, build_dataset(small_task()));
  EXPECT_EQ(a.model_train.size() + a.discriminator_train.size() + a.validation.size(), 100u);
  for (const auto* part : {&a.model_train, &a.discriminator_train, &a.validation}) {
    for (const auto& e : *part) {
      EXPECT_GE(e.image.pixels.minCoeff(), 0.0f);
      EXPECT_LE(e.image.pixels.maxCoeff(), 1.0f);
      EXPECT_GT(e.mask.cast<int>().sum(), 0);
      EXPECT_EQ(e.subclass, subclass_of(e.label == 1, e.artifact));
    }
  }
  for (const auto& e : a.model_train) EXPECT_FALSE(e.artifact);
}

TEST(Dataset, ValidationSubclassesBalanced) {
  const auto b = build_dataset(small_task(3330));
  ASSERT_EQ(b.validation.size(), 400u);
  std::map<Subclass, int> counts;
  for (const auto& e : b.validation) counts[e.subclass]++;
  for (int s = 0; s < 4; ++s) EXPECT_EQ(counts[static_cast<Subclass>(s)], 100);
}

TEST(Poison, ZeroRateIsIdentity) {
  const auto part = blank_partition(20, 2);
  PoisonSpec p;
  p.rate = 0.0;
  p.artifact = ArtifactSpec::square(2);
  for (Arm arm : {Arm::spurious, Arm::clean}) {
    p.arm = arm;
    EXPECT_EQ(poison_view(part, p), part);
  }
}

TEST(Poison, SpuriousArmFullRate) {
  const auto part = blank_partition(30, 3);
  PoisonSpec p;
  p.arm = Arm::spurious;
  p.rate = 1.0;
  p.classes = 3;
  p.spurious_class = 2;
  p.artifact = ArtifactSpec::square(2);
  for (const auto& e : poison_view(part, p)) {
    EXPECT_EQ(e.artifact, e.label == 2);
    EXPECT_EQ(e.image.at(0, 0) == 1.0f, e.label == 2);
  }
  p.spurious_class = 3;
  EXPECT_ANY_THROW(poison_view(part, p));
}

TEST(Poison, CleanArmCarriesNoLabelInformation) {
  const auto part = blank_partition(5000, 2);
  PoisonSpec p;
  p.arm = Arm::clean;
  p.rate = 0.5;
  p.artifact = ArtifactSpec::square(2);
  p.seed = 11;
  const auto view = poison_view(part, p);
  double joint[2][2] = {};
  for (const auto& e : view) joint[e.label][e.artifact ? 1 : 0] += 1.0 / view.size();
  for (int c = 0; c < 2; ++c) {
    EXPECT_NEAR(joint[c][1] / (joint[c][0] + joint[c][1]), 0.5, 0.05);
  }
  double mi = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (int a = 0; a < 2; ++a) {
      const double pc = joint[c][0] + joint[c][1];
      const double pa = joint[0][a] + joint[1][a];
      if (joint[c][a] > 0) mi += joint[c][a] * std::log2(joint[c][a] / (pc * pa));
    }
  }
  EXPECT_LE(mi, 0.01);
}

TEST(Format, LayoutLengthForTwoTinyImages) {
  auto part = blank_partition(1, 2);
  for (auto& e : part) {
    e.image = Image({4, 4, 1});
    e.mask = Mask::Zero(4, 4);
    e.mask(1, 2) = 1;
  }
  const auto bytes = serialize_examples(part, {4, 4, 1}, 0);
  // header 18, rasters 2*16*4, labels/flags/codes 3*2, masks 2*4 rows*1 byte
  EXPECT_EQ(bytes.size(), 18u + 128u + 6u + 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "EDSD");
  const auto back = deserialize_examples(bytes);
  EXPECT_EQ(back.examples, part);
}

TEST(Format, BundleRoundTripAndErrors) {
  const auto b = build_dataset(small_task(20));
  const auto bytes = serialize(b);
  EXPECT_EQ(deserialize(bytes), b);

  auto cut = bytes;
  cut.resize(cut.size() / 2);
  EXPECT_THROW(deserialize(cut), FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize(bad), FormatError);
  auto version = bytes;
  version[4] = 99;
  EXPECT_THROW(deserialize(version), FormatError);
}
