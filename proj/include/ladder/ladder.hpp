#pragma once

// Denoising autoencoder with per-neuron lateral connections whose encoder
// doubles as a classifier, trained jointly on C_class + eta * C_reconst.

#include "ladder/checkpoint.hpp"
#include "ladder/errors.hpp"
#include "ladder/gradcheck.hpp"
#include "ladder/layers.hpp"
#include "ladder/mnist.hpp"
#include "ladder/model.hpp"
#include "ladder/optimizer.hpp"
#include "ladder/plot.hpp"
#include "ladder/random.hpp"
#include "ladder/synth.hpp"
#include "ladder/tensor.hpp"
#include "ladder/train.hpp"
