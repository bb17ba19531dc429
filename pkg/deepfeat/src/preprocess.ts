/**
 * Deterministic preprocessing: RGBA bytes -> float32 RGB tensor, bilinear
 * resize to the network's input size, then ImageNet RGB mean subtraction
 * (the convention the classic pretrained conv nets were trained with).
 */

import * as tf from '@tensorflow/tfjs'
import type { DecodedImage } from './images.js'

export const IMAGENET_RGB_MEANS: [number, number, number] = [123.68, 116.779, 103.939]

export function imageToTensor(image: DecodedImage): tf.Tensor3D {
  const { width, height, rgba } = image
  const rgb = new Float32Array(width * height * 3)
  for (let p = 0, q = 0; p < width * height * 4; p += 4, q += 3) {
    rgb[q] = rgba[p]
    rgb[q + 1] = rgba[p + 1]
    rgb[q + 2] = rgba[p + 2]
  }
  return tf.tensor3d(rgb, [height, width, 3])
}

export function preprocessBatch(
  images: DecodedImage[],
  targetHeight: number,
  targetWidth: number,
): tf.Tensor4D {
  return tf.tidy(() => {
    const resized = images.map((img) =>
      tf.image.resizeBilinear(imageToTensor(img), [targetHeight, targetWidth]),
    )
    const batch = tf.stack(resized) as tf.Tensor4D
    return tf.sub(batch, tf.tensor1d(IMAGENET_RGB_MEANS)) as tf.Tensor4D
  })
}
