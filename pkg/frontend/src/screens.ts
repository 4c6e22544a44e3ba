// Screen assembly: fetch what a screen needs and hand it to its renderer.
// No DOM access here, so tests can drive every screen with a canned client.

import { ApiClient, scanChain } from "./api.js";
import type { Session } from "./roles.js";
import type {
  AbstractOfCanvassDoc,
  DeliveryChecklistDoc,
  PurchaseOrderDoc,
  PurchaseRequestDoc,
  VerifyQrJson,
} from "./types.js";
import { renderAdmin } from "./views/admin.js";
import { renderCanvass, type CanvassItem } from "./views/canvasser.js";
import { renderAssetRegistry, renderDeliveries, type AssetItem, type DeliveryItem } from "./views/custodian.js";
import { renderMyAssets, renderRequests, type PrListing } from "./views/employee.js";
import { renderInspections, type InspectionItem } from "./views/inspector.js";
import { renderVerify } from "./views/verify.js";

export interface ScreenExtras {
  flash?: string;
  verify?: { result: VerifyQrJson; pasted: string } | null;
}

export async function loadScreen(
  client: ApiClient,
  session: Session,
  screen: string,
  extras: ScreenExtras = {},
): Promise<string> {
  const flash = extras.flash ?? "";
  if (screen === "verify") {
    return renderVerify(extras.verify?.result ?? null, extras.verify?.pasted ?? "");
  }
  const refs = await scanChain(client);
  if (screen === "requests") {
    const own: PrListing[] = [];
    for (const ref of refs.prs) {
      if (ref.author !== session.user) continue;
      own.push({ txId: ref.txId, doc: (await client.document(ref.txId)) as PurchaseRequestDoc });
    }
    return renderRequests(own, flash);
  }
  if (screen === "my-assets") {
    const held = [];
    for (const uid of refs.assetUids) {
      const asset = await client.asset(uid);
      if (asset.custodian === session.user) held.push(asset);
    }
    return renderMyAssets(held);
  }
  if (screen === "canvass") {
    const items: CanvassItem[] = [];
    for (const ref of refs.prs) {
      const pr = (await client.document(ref.txId)) as PurchaseRequestDoc;
      if (pr.status !== "Submitted" && pr.status !== "UnderCanvass") continue;
      const aoc = pr.aoc_ref ? ((await client.document(pr.aoc_ref)) as AbstractOfCanvassDoc) : null;
      items.push({ txId: ref.txId, pr, aoc });
    }
    return renderCanvass(items, new Map(), flash);
  }
  if (screen === "inspections") {
    const pending: InspectionItem[] = [];
    for (const ref of refs.dcs) {
      const dc = (await client.document(ref.txId)) as DeliveryChecklistDoc;
      if (dc.ir_ref !== null) continue;
      pending.push({ dc, po: (await client.document(dc.po_ref)) as PurchaseOrderDoc });
    }
    return renderInspections(pending, flash);
  }
  if (screen === "deliveries") {
    const items: DeliveryItem[] = [];
    for (const ref of refs.pos) {
      const po = (await client.document(ref.txId)) as PurchaseOrderDoc;
      const last = po.dc_refs.length ? po.dc_refs[po.dc_refs.length - 1] : null;
      const latestDc = last ? ((await client.document(last)) as DeliveryChecklistDoc) : null;
      items.push({ po, latestDc });
    }
    return renderDeliveries(items, flash);
  }
  if (screen === "assets") {
    const items: AssetItem[] = [];
    for (const uid of refs.assetUids) {
      items.push({
        asset: await client.asset(uid),
        history: (await client.assetHistory(uid)).history,
        qrPngUrl: client.qrPngUrl(uid),
      });
    }
    const eligible: string[] = [];
    for (const ref of refs.pos) {
      const po = (await client.document(ref.txId)) as PurchaseOrderDoc;
      if (po.inspection_passed) eligible.push(po.po_id);
    }
    return renderAssetRegistry(items, eligible, flash);
  }
  if (screen === "admin") {
    const [users, validators, peers, audit, health, tip] = await Promise.all([
      client.users(),
      client.validators(),
      client.peers(),
      client.audit(),
      client.chainVerify(),
      client.head(),
    ]);
    const rejectable = [];
    for (const ref of refs.prs) {
      const pr = (await client.document(ref.txId)) as PurchaseRequestDoc;
      if (pr.status === "Submitted" || pr.status === "UnderCanvass") rejectable.push({ txId: ref.txId, pr });
    }
    return renderAdmin(
      { users, validators, peers, audit, health, tipHeight: tip.height, rejectablePrs: rejectable },
      flash,
    );
  }
  return `<p>unknown screen ${screen}</p>`;
}
