// Display <-> native pixel mapping for a contain-fitted frame.
//
// The frame is scaled uniformly to fit its view box and centered, which can
// leave letterbox margins on one axis. Annotations are always stored in
// native pixel coordinates, so every click goes through this mapping.

export interface FrameFit {
  scale: number; // display px per native px
  offsetX: number; // letterbox margin, display px
  offsetY: number;
  nativeWidth: number;
  nativeHeight: number;
}

export function fitFrame(
  nativeWidth: number,
  nativeHeight: number,
  viewWidth: number,
  viewHeight: number,
): FrameFit {
  if (nativeWidth <= 0 || nativeHeight <= 0 || viewWidth <= 0 || viewHeight <= 0) {
    throw new Error("frame and view sizes must be positive");
  }
  const scale = Math.min(viewWidth / nativeWidth, viewHeight / nativeHeight);
  return {
    scale,
    offsetX: (viewWidth - nativeWidth * scale) / 2,
    offsetY: (viewHeight - nativeHeight * scale) / 2,
    nativeWidth,
    nativeHeight,
  };
}

export interface NativePixel {
  px: number;
  py: number;
}

// Returns null for clicks in the letterbox margins or outside the frame.
export function displayToNative(fit: FrameFit, x: number, y: number): NativePixel | null {
  const px = (x - fit.offsetX) / fit.scale;
  const py = (y - fit.offsetY) / fit.scale;
  if (px < 0 || px > fit.nativeWidth || py < 0 || py > fit.nativeHeight) {
    return null;
  }
  return { px, py };
}

export function nativeToDisplay(fit: FrameFit, px: number, py: number): { x: number; y: number } {
  return { x: fit.offsetX + px * fit.scale, y: fit.offsetY + py * fit.scale };
}
