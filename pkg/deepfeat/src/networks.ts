/**
 * Pretrained-network loading and intermediate feature extraction.
 *
 * Networks are tfjs-format layers models stored on disk under
 * `<modelsDir>/<net>/model.json`. Features are the activation values of
 * the second fully connected layer taken BEFORE its nonlinearity (the
 * kernel/bias product of that layer applied to its input), so the vectors
 * keep their negative components; both supported network families expose
 * 4096 units there.
 */

import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

export const SUPPORTED_NETWORKS = ['alexnet', 'vgg16'] as const
export type NetworkName = (typeof SUPPORTED_NETWORKS)[number]
export const EXPECTED_FEATURE_DIM = 4096

interface WeightsManifestEntry {
  paths: string[]
  weights: tf.io.WeightsManifestEntry[]
}

function diskLoadHandler(modelJsonPath: string): tf.io.IOHandler {
  return {
    load: async () => {
      const raw = JSON.parse(fs.readFileSync(modelJsonPath, 'utf-8'))
      const dir = path.dirname(modelJsonPath)
      const manifest: WeightsManifestEntry[] = raw.weightsManifest ?? []
      const weightSpecs = manifest.flatMap((group) => group.weights)
      const buffers = manifest.flatMap((group) =>
        group.paths.map((p) => fs.readFileSync(path.join(dir, p))),
      )
      const total = buffers.reduce((n, b) => n + b.byteLength, 0)
      const weightData = new Uint8Array(total)
      let offset = 0
      for (const b of buffers) {
        weightData.set(new Uint8Array(b.buffer, b.byteOffset, b.byteLength), offset)
        offset += b.byteLength
      }
      return {
        modelTopology: raw.modelTopology,
        format: raw.format,
        generatedBy: raw.generatedBy,
        convertedBy: raw.convertedBy,
        weightSpecs,
        weightData: weightData.buffer,
      }
    },
  }
}

/** Save a layers model as model.json + weights.bin under `dir` (used to
 * provision local model fixtures and by conversion scripts). */
export async function saveModelToDisk(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true })
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightsName = 'weights.bin'
      const data = artifacts.weightData as ArrayBuffer
      fs.writeFileSync(path.join(dir, weightsName), Buffer.from(data))
      const json = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: artifacts.convertedBy ?? null,
        weightsManifest: [{ paths: [weightsName], weights: artifacts.weightSpecs }],
      }
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(json))
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON' as const,
        },
      }
    }),
  )
}

export function modelJsonPath(net: NetworkName, modelsDir: string): string {
  return path.join(modelsDir, net, 'model.json')
}

export async function loadNetwork(
  net: NetworkName,
  modelsDir: string,
): Promise<tf.LayersModel> {
  const jsonPath = modelJsonPath(net, modelsDir)
  if (!fs.existsSync(jsonPath)) {
    throw new Error(
      `pretrained weights for '${net}' not found: expected ${jsonPath}. ` +
        `Convert the Keras/ImageNet model with tensorflowjs_converter and place ` +
        `model.json (+ weight shards) in that directory, or pass --models DIR.`,
    )
  }
  return tf.loadLayersModel(diskLoadHandler(jsonPath))
}

function denseLayers(model: tf.LayersModel): tf.layers.Layer[] {
  return model.layers.filter((l) => l.getClassName() === 'Dense')
}

/**
 * Applies the model up to the second fully connected layer and returns
 * that layer's pre-activation output for a batch.
 */
export class FeatureExtractor {
  readonly featureDim: number
  readonly inputHeight: number
  readonly inputWidth: number
  private readonly trunk: tf.LayersModel
  private readonly kernel: tf.Tensor2D
  private readonly bias: tf.Tensor1D

  constructor(model: tf.LayersModel, expectedDim?: number) {
    const denses = denseLayers(model)
    if (denses.length < 2) {
      throw new Error(
        `model has ${denses.length} fully connected layers; need at least 2`,
      )
    }
    const target = denses[denses.length - 2]
    const [kernel, bias] = target.getWeights()
    this.kernel = kernel as tf.Tensor2D
    this.bias = bias as tf.Tensor1D
    this.featureDim = this.kernel.shape[1]
    if (expectedDim !== undefined && this.featureDim !== expectedDim) {
      throw new Error(
        `second fully connected layer has ${this.featureDim} units, ` +
          `expected ${expectedDim}`,
      )
    }
    this.trunk = tf.model({
      inputs: model.inputs,
      outputs: target.input as tf.SymbolicTensor,
    })
    const shape = model.inputs[0].shape
    this.inputHeight = shape[1] as number
    this.inputWidth = shape[2] as number
  }

  extract(batch: tf.Tensor4D): tf.Tensor2D {
    return tf.tidy(() => {
      const trunkOut = this.trunk.predict(batch) as tf.Tensor2D
      return tf.add(tf.matMul(trunkOut, this.kernel), this.bias) as tf.Tensor2D
    })
  }
}
