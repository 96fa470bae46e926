/**
 * Browser session: an imported key plus the actor's registry role.
 *
 * Login is local: the pasted key signs a random challenge which is
 * verified in place, proving the key material is usable before any
 * request goes out. Authorization proper happens server-side on every
 * signed request — a wrong key simply earns DENIED(signature) there.
 */

import { GatewayClient } from "./api.js";
import { ChainView, foldChain } from "./chainview.js";
import { Signer, randomChallenge, signerFromSeed, verify } from "./signing.js";

export interface Session {
  actorId: string;
  role: string;
  authority: boolean;
  signer: Signer;
}

export async function login(
  client: GatewayClient,
  actorId: string,
  seedHex: string,
): Promise<{ session: Session; view: ChainView }> {
  const signer = await signerFromSeed(seedHex);
  const challenge = randomChallenge();
  const proof = await signer.sign(challenge);
  if (!(await verify(signer.verificationKeyHex, challenge, proof))) {
    throw new Error("key failed the login challenge");
  }
  const view = foldChain(await client.chainBlocks());
  const role = view.roles.get(actorId);
  if (!role) {
    throw new Error(`actor ${actorId} is not registered on this network`);
  }
  return {
    session: {
      actorId,
      role,
      authority: view.authorities.has(actorId),
      signer,
    },
    view,
  };
}
