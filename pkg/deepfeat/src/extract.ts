/**
 * End-to-end extraction: image directory -> feature file + labels sidecar.
 *
 * Images are processed in sorted-filename order (batching never reorders
 * rows). Undecodable files are skipped with a warning and recorded in a
 * JSON manifest next to the output file.
 */

import * as fs from 'fs'
import * as tf from '@tensorflow/tfjs'
import { assignLabels, decodeImageFile, listImages, type DecodedImage } from './images.js'
import {
  EXPECTED_FEATURE_DIM,
  FeatureExtractor,
  loadNetwork,
  SUPPORTED_NETWORKS,
  type NetworkName,
} from './networks.js'
import { preprocessBatch } from './preprocess.js'
import { writeFeatureFile } from './featureFile.js'

export interface SkippedFile {
  file: string
  reason: string
}

export interface ExtractOptions {
  inputDir: string
  outPath: string
  net: NetworkName
  modelsDir: string
  batchSize?: number
  /** test hook: skip the 4096-unit check for non-standard models */
  expectedDim?: number | null
  log?: (message: string) => void
}

export interface ExtractResult {
  count: number
  dim: number
  skipped: SkippedFile[]
}

export function manifestPathFor(outPath: string): string {
  return outPath + '.manifest.json'
}

export async function extractFeatures(options: ExtractOptions): Promise<ExtractResult> {
  const log = options.log ?? ((m) => console.warn(m))
  if (!SUPPORTED_NETWORKS.includes(options.net)) {
    throw new Error(`unsupported network '${options.net}'`)
  }
  const model = await loadNetwork(options.net, options.modelsDir)
  const expectedDim =
    options.expectedDim === undefined ? EXPECTED_FEATURE_DIM : options.expectedDim
  const extractor = new FeatureExtractor(model, expectedDim ?? undefined)

  const entries = listImages(options.inputDir)
  const labelOf = assignLabels(entries)
  const batchSize = options.batchSize ?? 16

  const skipped: SkippedFile[] = []
  const kept: { id: string; label: number; image: DecodedImage }[] = []
  for (const entry of entries) {
    try {
      kept.push({
        id: entry.id,
        label: labelOf.get(entry.className)!,
        image: decodeImageFile(entry.file),
      })
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err)
      log(`skipping ${entry.file}: ${reason}`)
      skipped.push({ file: entry.id, reason })
    }
  }

  const dim = extractor.featureDim
  const values = new Float32Array(kept.length * dim)
  for (let start = 0; start < kept.length; start += batchSize) {
    const slice = kept.slice(start, start + batchSize)
    const batch = preprocessBatch(
      slice.map((k) => k.image),
      extractor.inputHeight,
      extractor.inputWidth,
    )
    const features = extractor.extract(batch)
    const data = (await features.data()) as Float32Array
    values.set(data, start * dim)
    batch.dispose()
    features.dispose()
  }

  writeFeatureFile(options.outPath, {
    count: kept.length,
    dim,
    values,
    ids: kept.map((k) => k.id),
    labels: kept.map((k) => k.label),
  })
  fs.writeFileSync(
    manifestPathFor(options.outPath),
    JSON.stringify({ count: kept.length, dim, skipped }, null, 2) + '\n',
  )
  return { count: kept.length, dim, skipped }
}

/** Make tfjs use the deterministic CPU backend. */
export async function useCpuBackend(): Promise<void> {
  await tf.setBackend('cpu')
  await tf.ready()
}
